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

#ifndef KINRES_REWARDS_REWARDS_H_
#define KINRES_REWARDS_REWARDS_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kinres/core/motion_clip.h"
#include "kinres/sim/model.h"
#include "kinres/sim/simulator.h"

namespace kinres {

struct ImitationWeights {
  double pose = 0.5;          // w_p
  double end_effector = 0.2;  // w_e
  double root_vel = 0.1;      // w_rv
  double root_rot = 0.1;      // w_rq
  double root_pos = 0.1;      // w_rp
};

struct FinetuneWeights {
  double head_pos = 0.25;  // w_hp
  double head_rot = 0.25;  // w_hq
  double head_vel = 0.1;   // w_hv
  double pose = 0.3;       // w_p, gated by lambda
  double action = 0.1;     // w_a, gated by 1 - lambda
};

// Both suites. Normalized() rescales each suite to sum to one; it throws
// ValidationError on negative weights or an all-zero suite.
struct RewardWeights {
  ImitationWeights imitation;
  FinetuneWeights finetune;

  RewardWeights Normalized() const;
};

// Named components in a fixed order plus the weighted total.
struct RewardBreakdown {
  double total = 0.0;
  std::vector<std::pair<std::string, double>> components;

  double Get(std::string_view name) const;  // throws when absent
};

// Sum over joint groups of the squared geodesic angle between the composed
// hinge rotations of gen and ref. Root excluded.
double PoseSquaredDistance(const sim::HumanoidModel& model, const VecX& gen,
                           const VecX& ref);

// exp(-5 * PoseSquaredDistance).
double PoseReward(const sim::HumanoidModel& model, const Pose& gen,
                  const Pose& ref);
double PoseReward(const sim::HumanoidModel& model, const VecX& gen,
                  const VecX& ref);

// exp(-4.5 * sum_e |e - e_hat|^2). Throws on set size mismatch.
double EndEffectorReward(const std::vector<Vec3>& gen,
                         const std::vector<Vec3>& ref);

struct RootRewards {
  double vel = 1.0;  // r_rv
  double rot = 1.0;  // r_rq
  double pos = 1.0;  // r_rp
};

// r_rv = exp(-|l - l_hat|^2 - 0.1 |w - w_hat|^2), r_rq = exp(-40 angle^2),
// r_rp = exp(-45 |p - p_hat|^2).
RootRewards ComputeRootRewards(const Pose& gen_pose, const Velocity& gen_vel,
                               const Pose& ref_pose, const Velocity& ref_vel);

// Reference quantities for one frame. End effectors are precomputed so that
// the caller can cache them per clip.
struct ImitationTarget {
  Pose pose;
  Velocity vel;
  std::vector<Vec3> end_effectors;

  static ImitationTarget FromFrame(const sim::HumanoidModel& model,
                                   const Frame& frame);
};

// Components: pose, end_effector, root_vel, root_rot, root_pos.
RewardBreakdown ImitationReward(const sim::HumanoidModel& model,
                                const sim::SimFeatures& gen,
                                const ImitationTarget& ref,
                                const ImitationWeights& weights);

// exp(-0.1 |v_ref - v_gen|^2) on head-local linear velocities.
double AdaptiveLambda(const Vec3& ref_local_vel, const Vec3& gen_local_vel);

struct HeadRewards {
  double pos = 1.0;  // r_hp
  double rot = 1.0;  // r_hq
  double vel = 1.0;  // r_hv
};

// Head velocity stacks world linear and angular velocity.
HeadRewards ComputeHeadRewards(const HeadSample& gen, const HeadSample& ref);

// exp(-|mu_tilde - mu|^2). Throws on length mismatch.
double ActionReward(const VecX& mu, const VecX& mu_frozen);

// Components: head_pos, head_rot, head_vel, pose, action, lambda. The total
// is w_hp r_hp + w_hq r_hq + w_hv r_hv + w_p lambda r_p + w_a (1-lambda) r_a
// with r_p measured against the kinematic pose.
RewardBreakdown FinetuneReward(const sim::HumanoidModel& model,
                               const sim::SimFeatures& gen,
                               const VecX& kinematic_joints,
                               const HeadSample& head_ref, const VecX& mu,
                               const VecX& mu_frozen,
                               const FinetuneWeights& weights);

}  // namespace kinres

#endif  // KINRES_REWARDS_REWARDS_H_
