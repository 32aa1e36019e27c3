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

#include "kinres/rl/env.h"

#include <algorithm>
#include <utility>

#include <fmt/format.h>

#include "kinres/core/error.h"
#include "kinres/regressor/features.h"

namespace kinres {
namespace {

UnitQuaternion HeadingRotation(const Pose& pose) {
  return UnitQuaternion::Yaw(pose.root_rot.Heading());
}

void CheckLength(size_t n, int expected, const char* what) {
  if (n != 0 && static_cast<int>(n) != expected) {
    throw ValidationError(fmt::format(
        "episode refs: {} has {} entries, expected {}", what, n, expected));
  }
}

}  // namespace

void EpisodeRefs::Validate() const {
  const int n = length();
  if (n < 2) throw ValidationError("episode refs need at least two frames");
  CheckLength(kin_vel.size(), n, "kin_vel");
  if (kin_vel.empty()) throw ValidationError("episode refs lack velocities");
  if (context.cols() != 0 && context.cols() != n) {
    throw ValidationError(fmt::format(
        "episode refs: context has {} frames, expected {}", context.cols(), n));
  }
  CheckLength(targets.size(), n, "targets");
  CheckLength(gt_objects.size(), n, "gt_objects");
  CheckLength(heads.size(), n, "heads");
}

EpisodeRefs RefsFromClip(const sim::HumanoidModel& model,
                         const MotionClip& clip, const nn::Mat& context) {
  clip.Validate();
  EpisodeRefs r;
  r.frame_rate = clip.frame_rate;
  r.action = clip.action;
  r.context = context;
  for (const Frame& f : clip.frames) {
    r.kin_pose.push_back(f.pose);
    r.kin_vel.push_back(f.vel);
    r.targets.push_back(ImitationTarget::FromFrame(model, f));
    r.gt_objects.push_back(f.objects);
    if (f.head) r.heads.push_back(*f.head);
  }
  if (!r.heads.empty() && static_cast<int>(r.heads.size()) != r.length()) {
    r.heads.clear();
  }
  r.scene_objects = clip.frames.front().objects;
  r.Validate();
  return r;
}

EpisodeRefs RefsFromEstimate(const sim::HumanoidModel& model,
                             const std::vector<Pose>& kin_pose,
                             const std::vector<Velocity>& kin_vel,
                             const nn::Mat& context, ActionLabel action,
                             double frame_rate,
                             const std::vector<ObjectState>& scene_objects,
                             std::vector<HeadSample> heads,
                             const MotionClip* gt) {
  EpisodeRefs r;
  r.frame_rate = frame_rate;
  r.action = action;
  r.kin_pose = kin_pose;
  r.kin_vel = kin_vel;
  r.context = context;
  r.scene_objects = scene_objects;
  r.heads = std::move(heads);
  if (gt != nullptr) {
    if (gt->num_frames() != r.length()) {
      throw ValidationError(fmt::format(
          "ground truth has {} frames, estimate has {}", gt->num_frames(),
          r.length()));
    }
    for (const Frame& f : gt->frames) {
      r.targets.push_back(ImitationTarget::FromFrame(model, f));
      r.gt_objects.push_back(f.objects);
    }
  }
  r.Validate();
  return r;
}

sim::SimState SetInitialState(InitMode mode, const EpisodeRefs& refs,
                              int start) {
  if (start < 0 || start >= refs.length()) {
    throw ValidationError(fmt::format("start frame {} is out of range", start));
  }
  sim::SimState s;
  if (mode == InitMode::kTrain) {
    if (refs.targets.empty() || refs.gt_objects.empty()) {
      throw ValidationError("train-mode initial state needs ground truth");
    }
    s.pose = refs.targets[start].pose;
    s.vel = refs.targets[start].vel;
    s.objects = refs.gt_objects[start];
  } else {
    s.pose = refs.kin_pose[start];
    s.vel = refs.kin_vel[start];
    s.objects = refs.scene_objects;
  }
  s.time = start / refs.frame_rate;
  return s;
}

void Write6d(const UnitQuaternion& q, double* out) {
  const Mat3 m = q.ToMatrix();
  for (int i = 0; i < 3; ++i) out[i] = m(i, 0);
  for (int i = 0; i < 3; ++i) out[3 + i] = m(i, 1);
}

int EncodedDim(int dof, int num_objects, int context_dim) {
  return 1 + 6 + dof + 6 + dof + 15 * num_objects + 2 * (dof + 9) +
         context_dim;
}

VecX EncodeState(const MdpState& s) {
  const int n = s.pose.dof();
  if (s.vel.joint_vel.size() != n || s.kin_pose.dof() != n ||
      s.kin_pose_next.dof() != n) {
    throw ValidationError("MDP state has inconsistent DoF counts");
  }
  const int ctx = static_cast<int>(s.context.size());
  VecX x(EncodedDim(n, static_cast<int>(s.objects.size()), ctx));
  const UnitQuaternion heading = HeadingRotation(s.pose);
  const UnitQuaternion inv = heading.Inverse();
  const Vec3& origin = s.pose.root_pos;
  int k = 0;
  x[k++] = s.pose.root_pos.z();
  Write6d(inv * s.pose.root_rot, x.data() + k);
  k += 6;
  x.segment(k, n) = s.pose.joint_angles;
  k += n;
  x.segment<3>(k) = inv.Rotate(s.vel.root_lin);
  x.segment<3>(k + 3) = inv.Rotate(s.vel.root_ang);
  k += 6;
  x.segment(k, n) = s.vel.joint_vel;
  k += n;
  for (const ObjectState& o : s.objects) {
    x.segment<3>(k) = inv.Rotate(o.pose.translation - origin);
    Write6d(inv * o.pose.rotation, x.data() + k + 3);
    x.segment<3>(k + 9) = inv.Rotate(o.lin_vel);
    x.segment<3>(k + 12) = inv.Rotate(o.ang_vel);
    k += 15;
  }
  for (const Pose* ref : {&s.kin_pose, &s.kin_pose_next}) {
    x.segment(k, n) = ref->joint_angles - s.pose.joint_angles;
    k += n;
    x.segment<3>(k) = inv.Rotate(ref->root_pos - origin);
    Write6d(inv * ref->root_rot, x.data() + k + 3);
    k += 9;
  }
  if (ctx > 0) {
    x.segment(k, ctx) = ContextInFrame(s.context, heading, origin);
    k += ctx;
  }
  return x;
}

VecX ComputePdTarget(const sim::HumanoidModel& model, const VecX& kin,
                     const VecX& action) {
  if (kin.size() != action.size() || kin.size() != model.dof()) {
    throw ValidationError(fmt::format(
        "PD target: reference has {} entries, action {}, model {}", kin.size(),
        action.size(), model.dof()));
  }
  return model.Clamp(kin + action);
}

Env::Env(sim::HumanoidModel model, sim::Scene scene, EnvConfig config,
         std::shared_ptr<const EpisodeRefs> refs)
    : sim_(std::move(model), std::move(scene), config.sim),
      config_(std::move(config)),
      refs_(std::move(refs)) {
  if (!refs_) throw ValidationError("environment needs references");
  refs_->Validate();
  if (refs_->kin_pose.front().dof() != sim_.model().dof()) {
    throw ValidationError("references do not match the model's DoF count");
  }
  if (config_.reward_mode == RewardMode::kImitation && refs_->targets.empty()) {
    throw ValidationError("imitation reward needs ground-truth targets");
  }
  if (config_.reward_mode == RewardMode::kFinetune && refs_->heads.empty()) {
    throw ValidationError("fine-tuning reward needs a head trajectory");
  }
  Reset(0);
}

int Env::obs_dim() const {
  return EncodedDim(act_dim(), static_cast<int>(sim_.scene().objects.size()),
                    static_cast<int>(refs_->context.rows()));
}

int Env::Horizon(int start) const {
  int h = refs_->length() - 1 - start;
  if (config_.max_steps > 0) h = std::min(h, config_.max_steps);
  return std::max(h, 0);
}

VecX Env::Reset(int start) {
  return ResetTo(SetInitialState(config_.init_mode, *refs_, start), start);
}

VecX Env::ResetTo(const sim::SimState& state, int start) {
  if (Horizon(start) < 1) {
    throw ValidationError(fmt::format("start frame {} leaves no steps", start));
  }
  state_ = state;
  if (state_.objects.size() != sim_.scene().objects.size()) {
    state_.objects = sim_.scene().InitialObjects();
  }
  frame_ = start;
  start_ = start;
  return Observe();
}

MdpState Env::CurrentMdpState() const {
  MdpState s;
  s.pose = state_.pose;
  s.vel = state_.vel;
  s.objects = state_.objects;
  if (refs_->context.cols() > 0) s.context = refs_->context.col(frame_);
  s.kin_pose = refs_->kin_pose[frame_];
  s.kin_pose_next = refs_->kin_pose[std::min(frame_ + 1, refs_->length() - 1)];
  return s;
}

VecX Env::Observe() const { return EncodeState(CurrentMdpState()); }

VecX Env::PdTarget(const VecX& action) const {
  if (config_.action_mode == ActionMode::kDirect) {
    if (action.size() != act_dim()) {
      throw ValidationError("action has the wrong length");
    }
    return model().Clamp(action);
  }
  return ComputePdTarget(model(), refs_->kin_pose[frame_].joint_angles, action);
}

StepResult Env::Step(const VecX& action, const VecX* mu,
                     const VecX* mu_frozen) {
  if (frame_ - start_ >= Horizon(start_)) {
    throw ValidationError("step past the end of the episode");
  }
  StepResult r;
  const VecX target = PdTarget(action);
  try {
    state_ = sim_.Step(state_, target);
  } catch (const DivergenceError&) {
    r.done = true;
    r.diverged = true;
    r.reward.total = 0.0;
    return r;
  }
  ++frame_;
  const sim::SimFeatures gen = sim_.Features(state_);
  if (config_.reward_mode == RewardMode::kImitation) {
    r.reward = ImitationReward(model(), gen, refs_->targets[frame_],
                               config_.weights.imitation);
  } else {
    if (mu == nullptr || mu_frozen == nullptr) {
      throw ValidationError("fine-tuning step needs both policy means");
    }
    r.reward = FinetuneReward(model(), gen, refs_->kin_pose[frame_].joint_angles,
                              refs_->heads[frame_], *mu, *mu_frozen,
                              config_.weights.finetune);
  }
  r.fallen = sim_.CheckTermination(state_) == sim::Termination::kFallen;
  r.done = r.fallen || frame_ - start_ >= Horizon(start_);
  r.obs = Observe();
  return r;
}

}  // namespace kinres
