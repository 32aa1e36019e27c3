// Copyright 2026 The kinres Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kinres/core/transform.h"

namespace kinres {

Transform Transform::Inverse() const {
  const UnitQuaternion inv = rotation.Inverse();
  return {inv, -inv.Rotate(translation)};
}

Mat4 Transform::ToMatrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation.ToMatrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Transform Compose(const Transform& a, const Transform& b) {
  return {a.rotation * b.rotation, a.translation + a.rotation.Rotate(b.translation)};
}

}  // namespace kinres
