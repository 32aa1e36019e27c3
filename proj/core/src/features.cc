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

#include "kinres/regressor/features.h"

#include "kinres/core/error.h"

namespace kinres {

VecX ContextFeatures(const HeadSample& head, ActionLabel action) {
  using L = FeatureLayout;
  VecX f = VecX::Zero(L::kDim);
  const Mat3 r = head.rot.ToMatrix();
  f.segment<3>(L::kPos) = head.pos;
  f.segment<3>(L::kRot) = r.col(0);
  f.segment<3>(L::kRot + 3) = r.col(1);
  f.segment<3>(L::kLinWorld) = head.lin_vel_world;
  f.segment<3>(L::kAngWorld) = head.ang_vel_world;
  f.segment<3>(L::kLinLocal) = head.lin_vel_local;
  switch (action) {
    case ActionLabel::kSit: f[L::kAction] = 1.0; break;
    case ActionLabel::kPush: f[L::kAction + 1] = 1.0; break;
    case ActionLabel::kAvoid: f[L::kAction + 2] = 1.0; break;
    case ActionLabel::kOther: break;
  }
  return f;
}

VecX ContextInFrame(const VecX& features, const UnitQuaternion& frame_rot,
                    const Vec3& frame_origin) {
  using L = FeatureLayout;
  if (features.size() != L::kDim) {
    throw ValidationError("context vector has the wrong dimension");
  }
  const Mat3 rt = frame_rot.ToMatrix().transpose();
  VecX f = features;
  f.segment<3>(L::kPos) = rt * (features.segment<3>(L::kPos) - frame_origin);
  f.segment<3>(L::kRot) = rt * features.segment<3>(L::kRot);
  f.segment<3>(L::kRot + 3) = rt * features.segment<3>(L::kRot + 3);
  f.segment<3>(L::kLinWorld) = rt * features.segment<3>(L::kLinWorld);
  f.segment<3>(L::kAngWorld) = rt * features.segment<3>(L::kAngWorld);
  return f;
}

}  // namespace kinres
