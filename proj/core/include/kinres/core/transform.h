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

#ifndef KINRES_CORE_TRANSFORM_H_
#define KINRES_CORE_TRANSFORM_H_

#include "kinres/core/quaternion.h"

namespace kinres {

// Rigid transform x -> rotation * x + translation (meters).
struct Transform {
  UnitQuaternion rotation;
  Vec3 translation = Vec3::Zero();

  static Transform Identity() { return {}; }
  static Transform Translation(const Vec3& t) { return {UnitQuaternion(), t}; }

  Transform Inverse() const;
  Vec3 Apply(const Vec3& p) const { return rotation.Rotate(p) + translation; }
  // 4x4 homogeneous matrix.
  Mat4 ToMatrix() const;
};

// Composition matching the homogeneous product A * B.
Transform Compose(const Transform& a, const Transform& b);

inline Transform operator*(const Transform& a, const Transform& b) {
  return Compose(a, b);
}

}  // namespace kinres

#endif  // KINRES_CORE_TRANSFORM_H_
