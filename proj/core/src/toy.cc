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

#include "kinres/rl/toy.h"

#include <cmath>
#include <memory>
#include <numbers>

#include "kinres/core/error.h"

namespace kinres {

MotionClip PendulumReference(const sim::HumanoidModel& model,
                             const PendulumSpec& spec) {
  if (model.dof() != 1 || !model.fixed_base) {
    throw ValidationError("pendulum reference needs a fixed-base 1-DoF model");
  }
  if (!(spec.period > 0.0) || !(spec.frame_rate > 0.0) ||
      spec.duration * spec.frame_rate < 1.0) {
    throw ValidationError("invalid pendulum reference spec");
  }
  MotionClip clip;
  clip.frame_rate = spec.frame_rate;
  clip.joint_names = model.DofNames();
  const int frames = static_cast<int>(std::lround(spec.duration * spec.frame_rate)) + 1;
  const double w = 2.0 * std::numbers::pi / spec.period;
  for (int i = 0; i < frames; ++i) {
    const double t = i / spec.frame_rate;
    Frame f;
    f.pose.root_pos = model.base.translation;
    f.pose.root_rot = model.base.rotation;
    f.pose.joint_angles = VecX::Constant(1, spec.amplitude * std::sin(w * t));
    f.vel = Velocity::Zero(1);
    f.vel.joint_vel[0] = spec.amplitude * w * std::cos(w * t);
    clip.frames.push_back(std::move(f));
  }
  clip.Validate();
  return clip;
}

Task PendulumTask(const PendulumSpec& spec) {
  Task task;
  task.model = sim::Pendulum();
  const MotionClip clip = PendulumReference(task.model, spec);
  task.scenes = {sim::Scene{}};
  task.refs = {std::make_shared<const EpisodeRefs>(
      RefsFromClip(task.model, clip, nn::Mat()))};
  task.env.sim.horizon = spec.duration + 1.0;
  task.random_start = true;
  return task;
}

}  // namespace kinres
