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

#ifndef KINRES_SIM_KINEMATICS_H_
#define KINRES_SIM_KINEMATICS_H_

#include <vector>

#include "kinres/core/motion_clip.h"
#include "kinres/sim/model.h"

namespace kinres::sim {

// World transform of every link frame for `pose`.
std::vector<Transform> LinkTransforms(const HumanoidModel& model,
                                      const Pose& pose);

// World transform of each joint group (one per non-root link with hinges),
// relative rotation only: the composed hinge rotation of that link.
std::vector<UnitQuaternion> JointGroupRotations(const HumanoidModel& model,
                                                const VecX& joint_angles);

Vec3 SitePosition(const std::vector<Transform>& links, const Site& site);

// World positions of the model's end effectors, in model order.
std::vector<Vec3> EndEffectorPositions(const HumanoidModel& model,
                                       const Pose& pose);

// World origins of every link (root included) followed by the end effectors;
// the point set compared by position metrics.
std::vector<Vec3> KeypointPositions(const HumanoidModel& model,
                                    const Pose& pose);
std::vector<std::string> KeypointNames(const HumanoidModel& model);

// Sample points bounding a geometry in world coordinates: sphere centres for
// spheres and capsules (with radius), corners for boxes (radius 0).
struct GeomSphere {
  Vec3 center;
  double radius;
};
std::vector<GeomSphere> GeomSpheres(const Geom& geom, const Transform& owner,
                                    bool with_midpoint);

}  // namespace kinres::sim

#endif  // KINRES_SIM_KINEMATICS_H_
