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

#include "kinres/rewards/rewards.h"

#include <cmath>

#include <fmt/format.h>

#include "kinres/core/error.h"
#include "kinres/sim/kinematics.h"

namespace kinres {
namespace {

void CheckNonNegative(double w, const char* name) {
  if (!(w >= 0.0) || !std::isfinite(w)) {
    throw ValidationError(fmt::format("reward weight {} must be >= 0", name));
  }
}

}  // namespace

RewardWeights RewardWeights::Normalized() const {
  RewardWeights out = *this;
  ImitationWeights& a = out.imitation;
  CheckNonNegative(a.pose, "pose");
  CheckNonNegative(a.end_effector, "end_effector");
  CheckNonNegative(a.root_vel, "root_vel");
  CheckNonNegative(a.root_rot, "root_rot");
  CheckNonNegative(a.root_pos, "root_pos");
  const double sa = a.pose + a.end_effector + a.root_vel + a.root_rot + a.root_pos;
  if (sa <= 0.0) throw ValidationError("imitation weights sum to zero");
  a.pose /= sa;
  a.end_effector /= sa;
  a.root_vel /= sa;
  a.root_rot /= sa;
  a.root_pos /= sa;

  FinetuneWeights& f = out.finetune;
  CheckNonNegative(f.head_pos, "head_pos");
  CheckNonNegative(f.head_rot, "head_rot");
  CheckNonNegative(f.head_vel, "head_vel");
  CheckNonNegative(f.pose, "finetune pose");
  CheckNonNegative(f.action, "action");
  const double sf = f.head_pos + f.head_rot + f.head_vel + f.pose + f.action;
  if (sf <= 0.0) throw ValidationError("fine-tuning weights sum to zero");
  f.head_pos /= sf;
  f.head_rot /= sf;
  f.head_vel /= sf;
  f.pose /= sf;
  f.action /= sf;
  return out;
}

double RewardBreakdown::Get(std::string_view name) const {
  for (const auto& [k, v] : components) {
    if (k == name) return v;
  }
  throw ValidationError(fmt::format("no reward component '{}'", name));
}

double PoseSquaredDistance(const sim::HumanoidModel& model, const VecX& gen,
                           const VecX& ref) {
  if (gen.size() != model.dof() || ref.size() != model.dof()) {
    throw ValidationError(fmt::format(
        "pose reward: DoF mismatch ({} and {} vs model {})", gen.size(),
        ref.size(), model.dof()));
  }
  const auto g = sim::JointGroupRotations(model, gen);
  const auto r = sim::JointGroupRotations(model, ref);
  double sum = 0.0;
  for (size_t j = 0; j < g.size(); ++j) {
    const double a = QuatDiffAngle(r[j], g[j]);
    sum += a * a;
  }
  return sum;
}

double PoseReward(const sim::HumanoidModel& model, const VecX& gen,
                  const VecX& ref) {
  return std::exp(-5.0 * PoseSquaredDistance(model, gen, ref));
}

double PoseReward(const sim::HumanoidModel& model, const Pose& gen,
                  const Pose& ref) {
  return PoseReward(model, gen.joint_angles, ref.joint_angles);
}

double EndEffectorReward(const std::vector<Vec3>& gen,
                         const std::vector<Vec3>& ref) {
  if (gen.size() != ref.size()) {
    throw ValidationError(fmt::format(
        "end-effector sets differ in size ({} vs {})", gen.size(), ref.size()));
  }
  double sum = 0.0;
  for (size_t e = 0; e < gen.size(); ++e) sum += (gen[e] - ref[e]).squaredNorm();
  return std::exp(-4.5 * sum);
}

RootRewards ComputeRootRewards(const Pose& gen_pose, const Velocity& gen_vel,
                               const Pose& ref_pose, const Velocity& ref_vel) {
  RootRewards r;
  r.vel = std::exp(-(gen_vel.root_lin - ref_vel.root_lin).squaredNorm() -
                   0.1 * (gen_vel.root_ang - ref_vel.root_ang).squaredNorm());
  const double a = QuatDiffAngle(gen_pose.root_rot, ref_pose.root_rot);
  r.rot = std::exp(-40.0 * a * a);
  r.pos = std::exp(-45.0 * (gen_pose.root_pos - ref_pose.root_pos).squaredNorm());
  return r;
}

ImitationTarget ImitationTarget::FromFrame(const sim::HumanoidModel& model,
                                           const Frame& frame) {
  return {frame.pose, frame.vel, sim::EndEffectorPositions(model, frame.pose)};
}

RewardBreakdown ImitationReward(const sim::HumanoidModel& model,
                                const sim::SimFeatures& gen,
                                const ImitationTarget& ref,
                                const ImitationWeights& w) {
  const double rp = PoseReward(model, gen.pose, ref.pose);
  const double re = EndEffectorReward(gen.end_effectors, ref.end_effectors);
  const RootRewards root = ComputeRootRewards(gen.pose, gen.vel, ref.pose, ref.vel);
  RewardBreakdown b;
  b.components = {{"pose", rp},
                  {"end_effector", re},
                  {"root_vel", root.vel},
                  {"root_rot", root.rot},
                  {"root_pos", root.pos}};
  b.total = w.pose * rp + w.end_effector * re + w.root_vel * root.vel +
            w.root_rot * root.rot + w.root_pos * root.pos;
  return b;
}

double AdaptiveLambda(const Vec3& ref_local_vel, const Vec3& gen_local_vel) {
  return std::exp(-0.1 * (ref_local_vel - gen_local_vel).squaredNorm());
}

HeadRewards ComputeHeadRewards(const HeadSample& gen, const HeadSample& ref) {
  HeadRewards r;
  r.pos = std::exp(-10.0 * (ref.pos - gen.pos).squaredNorm());
  const double a = QuatDiffAngle(ref.rot, gen.rot);
  r.rot = std::exp(-10.0 * a * a);
  r.vel = std::exp(-0.1 * ((ref.lin_vel_world - gen.lin_vel_world).squaredNorm() +
                           (ref.ang_vel_world - gen.ang_vel_world).squaredNorm()));
  return r;
}

double ActionReward(const VecX& mu, const VecX& mu_frozen) {
  if (mu.size() != mu_frozen.size()) {
    throw ValidationError(fmt::format("action means differ in length ({} vs {})",
                                      mu.size(), mu_frozen.size()));
  }
  return std::exp(-(mu_frozen - mu).squaredNorm());
}

RewardBreakdown FinetuneReward(const sim::HumanoidModel& model,
                               const sim::SimFeatures& gen,
                               const VecX& kinematic_joints,
                               const HeadSample& head_ref, const VecX& mu,
                               const VecX& mu_frozen,
                               const FinetuneWeights& w) {
  const HeadRewards h = ComputeHeadRewards(gen.head, head_ref);
  const double rp = PoseReward(model, gen.pose.joint_angles, kinematic_joints);
  const double ra = ActionReward(mu, mu_frozen);
  const double lambda =
      AdaptiveLambda(head_ref.lin_vel_local, gen.head.lin_vel_local);
  RewardBreakdown b;
  b.components = {{"head_pos", h.pos}, {"head_rot", h.rot}, {"head_vel", h.vel},
                  {"pose", rp},        {"action", ra},      {"lambda", lambda}};
  b.total = w.head_pos * h.pos + w.head_rot * h.rot + w.head_vel * h.vel +
            w.pose * lambda * rp + w.action * (1.0 - lambda) * ra;
  return b;
}

}  // namespace kinres
