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

#ifndef KINRES_RL_ENV_H_
#define KINRES_RL_ENV_H_

#include <memory>
#include <optional>
#include <vector>

#include "kinres/core/motion_clip.h"
#include "kinres/nn/tape.h"
#include "kinres/rewards/rewards.h"
#include "kinres/sim/simulator.h"

namespace kinres {

// Everything an episode is conditioned on, indexed by frame. The kinematic
// reference is either the ground truth (training) or decoded regressor
// output (test). Ground-truth targets are absent at test time; the head
// trajectory is only needed for fine-tuning.
struct EpisodeRefs {
  double frame_rate = 30.0;
  ActionLabel action = ActionLabel::kOther;
  std::vector<Pose> kin_pose;
  std::vector<Velocity> kin_vel;
  nn::Mat context;  // feature_dim x frames
  std::vector<ImitationTarget> targets;
  std::vector<std::vector<ObjectState>> gt_objects;
  std::vector<HeadSample> heads;
  std::vector<ObjectState> scene_objects;  // estimated initial object poses

  int length() const { return static_cast<int>(kin_pose.size()); }
  // Checks that every present sequence has length() entries.
  void Validate() const;
};

// Training refs: the clip is both reference and target.
EpisodeRefs RefsFromClip(const sim::HumanoidModel& model,
                         const MotionClip& clip, const nn::Mat& context);

// Test refs: kinematic reference from decoded regressor states, objects from
// the scene file, head trajectory for fine-tuning. `gt` (optional) fills the
// imitation targets for evaluation.
EpisodeRefs RefsFromEstimate(const sim::HumanoidModel& model,
                             const std::vector<Pose>& kin_pose,
                             const std::vector<Velocity>& kin_vel,
                             const nn::Mat& context, ActionLabel action,
                             double frame_rate,
                             const std::vector<ObjectState>& scene_objects,
                             std::vector<HeadSample> heads,
                             const MotionClip* gt = nullptr);

enum class InitMode { kTrain, kTest };

// Train: ground-truth frame `start` (pose, velocity, objects). Test: the
// kinematic reference at `start` and the scene-file objects. Throws
// ValidationError when the needed refs are missing.
sim::SimState SetInitialState(InitMode mode, const EpisodeRefs& refs,
                              int start = 0);

struct MdpState {
  Pose pose;
  Velocity vel;
  VecX context;
  std::vector<ObjectState> objects;
  Pose kin_pose;       // reference at t
  Pose kin_pose_next;  // reference at t + 1
};

// Fixed layout, everything in the heading frame (yaw of the root, origin at
// the root):
//   root height (1), root rotation 6D (6), q (n),
//   root linear and angular velocity (6), qdot (n),
//   per object: position, rotation 6D, linear and angular velocity (15),
//   for the reference at t and t + 1: joint deltas qbar - q (n), root
//   position delta (3), root rotation 6D (6),
//   context re-expressed in the heading frame (context length).
VecX EncodeState(const MdpState& s);
int EncodedDim(int dof, int num_objects, int context_dim);

// Rotation-matrix columns x and y of q.
void Write6d(const UnitQuaternion& q, double* out);

// clamp(kin + action) to the joint limits. Throws on length mismatch.
VecX ComputePdTarget(const sim::HumanoidModel& model, const VecX& kin,
                     const VecX& action);

enum class ActionMode { kResidual, kDirect };
enum class RewardMode { kImitation, kFinetune };

struct EnvConfig {
  sim::SimConfig sim;
  ActionMode action_mode = ActionMode::kResidual;
  RewardMode reward_mode = RewardMode::kImitation;
  InitMode init_mode = InitMode::kTrain;
  RewardWeights weights;
  int max_steps = 0;  // <= 0: run to the end of the refs
};

struct StepResult {
  VecX obs;
  RewardBreakdown reward;
  bool done = false;
  bool fallen = false;    // terminal: no bootstrap
  bool diverged = false;  // simulator blew up; the episode is truncated
};

// One episode over a reference track. Control step k advances from frame
// start + k to start + k + 1; its reward compares the resulting state with
// the references at frame start + k + 1.
class Env {
 public:
  Env(sim::HumanoidModel model, sim::Scene scene, EnvConfig config,
      std::shared_ptr<const EpisodeRefs> refs);

  int obs_dim() const;
  int act_dim() const { return sim_.model().dof(); }
  const sim::HumanoidModel& model() const { return sim_.model(); }
  const EnvConfig& config() const { return config_; }
  const EpisodeRefs& refs() const { return *refs_; }
  const sim::SimState& state() const { return state_; }
  int frame() const { return frame_; }
  // Number of control steps an episode started at `start` can take.
  int Horizon(int start) const;

  VecX Reset(int start = 0);
  // Resets to an explicit state (used by tests and evaluation).
  VecX ResetTo(const sim::SimState& state, int start);
  MdpState CurrentMdpState() const;
  VecX Observe() const;
  VecX PdTarget(const VecX& action) const;
  sim::SimFeatures Features() { return sim_.Features(state_); }

  // `mu` and `mu_frozen` are the current and frozen policy means at the
  // pre-step state; they are only read in fine-tuning mode.
  StepResult Step(const VecX& action, const VecX* mu = nullptr,
                  const VecX* mu_frozen = nullptr);

 private:
  sim::Simulator sim_;
  EnvConfig config_;
  std::shared_ptr<const EpisodeRefs> refs_;
  sim::SimState state_;
  int frame_ = 0;
  int start_ = 0;
};

}  // namespace kinres

#endif  // KINRES_RL_ENV_H_
