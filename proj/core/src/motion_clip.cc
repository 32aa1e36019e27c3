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

#include "kinres/core/motion_clip.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "kinres/core/error.h"

namespace kinres {

HeadSample HeadSample::Make(const Vec3& pos, const UnitQuaternion& rot,
                            const Vec3& lin_vel_world,
                            const Vec3& ang_vel_world) {
  HeadSample h;
  h.pos = pos;
  h.rot = rot;
  h.lin_vel_world = lin_vel_world;
  h.lin_vel_local = rot.Inverse().Rotate(lin_vel_world);
  h.ang_vel_world = ang_vel_world;
  return h;
}

std::string_view ActionName(ActionLabel a) {
  switch (a) {
    case ActionLabel::kSit:
      return "sit";
    case ActionLabel::kPush:
      return "push";
    case ActionLabel::kAvoid:
      return "avoid";
    case ActionLabel::kOther:
      return "other";
  }
  return "other";
}

ActionLabel ParseAction(std::string_view name) {
  for (ActionLabel a : {ActionLabel::kSit, ActionLabel::kPush,
                        ActionLabel::kAvoid, ActionLabel::kOther}) {
    if (ActionName(a) == name) return a;
  }
  throw ValidationError(fmt::format("unknown action label '{}'", name));
}

void MotionClip::Validate() const {
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
    throw ValidationError(fmt::format("invalid frame rate {}", frame_rate));
  }
  if (frames.size() < 2) {
    throw ValidationError(
        fmt::format("clip needs at least 2 frames, has {}", frames.size()));
  }
  const int n = frames.front().pose.dof();
  if (!joint_names.empty() && static_cast<int>(joint_names.size()) != n) {
    throw ValidationError(fmt::format(
        "frame 0 has {} joint angles but the clip declares {} joints", n,
        joint_names.size()));
  }
  for (size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    if (f.pose.dof() != n || f.vel.joint_vel.size() != n) {
      throw ValidationError(
          fmt::format("frame {} has DoF {} (velocity {}), expected {}", i,
                      f.pose.dof(), f.vel.joint_vel.size(), n));
    }
    for (const ObjectState& o : f.objects) {
      if (std::find(object_ids.begin(), object_ids.end(), o.object_id) ==
          object_ids.end()) {
        throw ValidationError(fmt::format(
            "frame {} references undeclared object '{}'", i, o.object_id));
      }
    }
  }
}

MotionClip FiniteDifferenceVelocities(MotionClip clip) {
  const int t_count = clip.num_frames();
  if (t_count < 2) {
    throw ValidationError(fmt::format(
        "finite differences need at least 2 frames, clip has {}", t_count));
  }
  const double rate = clip.frame_rate;
  for (int t = 0; t + 1 < t_count; ++t) {
    const Frame& a = clip.frames[t];
    const Frame& b = clip.frames[t + 1];
    Velocity v;
    v.root_lin = (b.pose.root_pos - a.pose.root_pos) * rate;
    v.root_ang =
        (b.pose.root_rot * a.pose.root_rot.Inverse()).ToRotationVector() * rate;
    v.joint_vel = (b.pose.joint_angles - a.pose.joint_angles) * rate;
    clip.frames[t].vel = std::move(v);

    std::vector<ObjectState>& objs = clip.frames[t].objects;
    for (ObjectState& o : objs) {
      auto next = std::find_if(
          b.objects.begin(), b.objects.end(),
          [&](const ObjectState& s) { return s.object_id == o.object_id; });
      if (next == b.objects.end()) continue;
      o.lin_vel = (next->pose.translation - o.pose.translation) * rate;
      o.ang_vel = (next->pose.rotation * o.pose.rotation.Inverse())
                      .ToRotationVector() *
                  rate;
    }
  }
  Frame& last = clip.frames[t_count - 1];
  const Frame& prev = clip.frames[t_count - 2];
  last.vel = prev.vel;
  for (ObjectState& o : last.objects) {
    for (const ObjectState& p : prev.objects) {
      if (p.object_id == o.object_id) {
        o.lin_vel = p.lin_vel;
        o.ang_vel = p.ang_vel;
      }
    }
  }
  return clip;
}

}  // namespace kinres
