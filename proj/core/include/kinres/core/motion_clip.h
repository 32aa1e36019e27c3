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

#ifndef KINRES_CORE_MOTION_CLIP_H_
#define KINRES_CORE_MOTION_CLIP_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kinres/core/quaternion.h"
#include "kinres/core/transform.h"

namespace kinres {

// Generalized coordinates of the humanoid: floating root plus hinge angles in
// the model's declared DoF order. Ball joints appear as consecutive hinges.
struct Pose {
  Vec3 root_pos = Vec3::Zero();
  UnitQuaternion root_rot;
  VecX joint_angles;

  int dof() const { return static_cast<int>(joint_angles.size()); }
  Transform RootTransform() const { return {root_rot, root_pos}; }
};

// Root velocities are world-frame; root_lin is the velocity of the root origin.
struct Velocity {
  Vec3 root_lin = Vec3::Zero();
  Vec3 root_ang = Vec3::Zero();
  VecX joint_vel;

  static Velocity Zero(int dof) {
    return {Vec3::Zero(), Vec3::Zero(), VecX::Zero(dof)};
  }
};

struct ObjectState {
  std::string object_id;
  Transform pose;
  Vec3 lin_vel = Vec3::Zero();
  Vec3 ang_vel = Vec3::Zero();
};

// Head (camera) sample. lin_vel_local is lin_vel_world expressed in the head
// frame; build through Make to keep the two consistent.
struct HeadSample {
  Vec3 pos = Vec3::Zero();
  UnitQuaternion rot;
  Vec3 lin_vel_world = Vec3::Zero();
  Vec3 lin_vel_local = Vec3::Zero();
  Vec3 ang_vel_world = Vec3::Zero();

  static HeadSample Make(const Vec3& pos, const UnitQuaternion& rot,
                         const Vec3& lin_vel_world,
                         const Vec3& ang_vel_world = Vec3::Zero());
};

enum class ActionLabel { kSit, kPush, kAvoid, kOther };

std::string_view ActionName(ActionLabel a);
// Throws ValidationError for unknown names.
ActionLabel ParseAction(std::string_view name);

struct Frame {
  Pose pose;
  Velocity vel;
  std::vector<ObjectState> objects;
  std::optional<HeadSample> head;
};

struct MotionClip {
  double frame_rate = 30.0;
  ActionLabel action = ActionLabel::kOther;
  std::vector<std::string> joint_names;
  std::vector<std::string> object_ids;
  std::vector<Frame> frames;

  int num_frames() const { return static_cast<int>(frames.size()); }
  int dof() const {
    return frames.empty() ? static_cast<int>(joint_names.size())
                          : frames.front().pose.dof();
  }
  double dt() const { return 1.0 / frame_rate; }

  // Checks frame count >= 2, positive rate, shared DoF, and object ids.
  // Throws ValidationError naming the offending frame.
  void Validate() const;
};

// Forward differences scaled by the frame rate; the last frame repeats the
// penultimate velocity. Root angular velocity is the world-frame rotation
// vector of q_{t+1} q_t^-1 times the rate. Object velocities are filled the
// same way. Throws ValidationError for clips with fewer than two frames.
MotionClip FiniteDifferenceVelocities(MotionClip clip);

}  // namespace kinres

#endif  // KINRES_CORE_MOTION_CLIP_H_
