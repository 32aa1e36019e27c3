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

#ifndef KINRES_RL_TOY_H_
#define KINRES_RL_TOY_H_

#include "kinres/core/motion_clip.h"
#include "kinres/rl/ppo.h"
#include "kinres/sim/model.h"

namespace kinres {

struct PendulumSpec {
  double amplitude = 0.8;  // rad
  double period = 2.0;     // s
  double duration = 4.0;   // s
  double frame_rate = 30.0;
};

// q(t) = amplitude sin(2 pi t / period) with analytic velocities.
MotionClip PendulumReference(const sim::HumanoidModel& model,
                             const PendulumSpec& spec);

// Fixed-base pendulum with weak PD gains tracking PendulumReference: the PD
// servo alone sags under gravity, so the policy has to learn the feed-forward
// residual. No context features, random start frames.
Task PendulumTask(const PendulumSpec& spec = {});

}  // namespace kinres

#endif  // KINRES_RL_TOY_H_
