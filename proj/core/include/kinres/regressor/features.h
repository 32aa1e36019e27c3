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

#ifndef KINRES_REGRESSOR_FEATURES_H_
#define KINRES_REGRESSOR_FEATURES_H_

#include "kinres/core/motion_clip.h"

namespace kinres {

// Layout of the per-frame visual context vector. The geometric blocks are
// world-frame head (camera) motion; the tail is the action one-hot.
struct FeatureLayout {
  static constexpr int kPos = 0;        // 3
  static constexpr int kRot = 3;        // 6, first two columns of R
  static constexpr int kLinWorld = 9;   // 3
  static constexpr int kAngWorld = 12;  // 3
  static constexpr int kLinLocal = 15;  // 3
  static constexpr int kAction = 18;    // 3: sit, push, avoid
  static constexpr int kDim = 21;
};

// Noise-free context vector for one head sample.
VecX ContextFeatures(const HeadSample& head, ActionLabel action);

// Re-expresses the geometric blocks of a context vector in a frame with
// rotation `frame_rot` and origin `frame_origin` (positions become relative).
// Works on noisy vectors; the action block passes through.
VecX ContextInFrame(const VecX& features, const UnitQuaternion& frame_rot,
                    const Vec3& frame_origin);

}  // namespace kinres

#endif  // KINRES_REGRESSOR_FEATURES_H_
