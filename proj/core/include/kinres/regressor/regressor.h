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

#ifndef KINRES_REGRESSOR_REGRESSOR_H_
#define KINRES_REGRESSOR_REGRESSOR_H_

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "kinres/core/motion_clip.h"
#include "kinres/nn/layers.h"
#include "kinres/nn/params.h"
#include "kinres/sim/model.h"

namespace kinres {

// Per-frame regressor output: everything but the root height.
struct KinematicState {
  Eigen::Vector2d root_xy = Eigen::Vector2d::Zero();
  UnitQuaternion root_rot;
  VecX joint_angles;
  Vec3 root_lin = Vec3::Zero();
  Vec3 root_ang = Vec3::Zero();
  VecX joint_vel;

  // Raw layout: xy(2) quat wxyz(4) q(dof) lin(3) ang(3) qdot(dof).
  static int RawDim(int dof) { return 12 + 2 * dof; }
  // The quaternion is written with w >= 0.
  VecX ToRaw() const;
  // Normalizes the quaternion block; a zero block decodes to identity.
  static KinematicState FromRaw(const VecX& raw, int dof);
  static KinematicState FromFrame(const Frame& frame);

  // Completes the root height by placing the lowest geometry of the decoded
  // pose on the ground plane.
  std::pair<Pose, Velocity> Decode(const sim::HumanoidModel& model) const;
};

// Columns are frames.
struct FeatureSequence {
  nn::Mat values;

  int dim() const { return static_cast<int>(values.rows()); }
  int length() const { return static_cast<int>(values.cols()); }
};

// Raw targets of a clip, one column per frame.
nn::Mat RawTargets(const MotionClip& clip);

struct RegressorConfig {
  int feature_dim = 21;
  int dof = 16;
  int hidden = 64;
  std::vector<int> decoder_hidden = {128};
};

// GRU encoder over the feature sequence; a per-frame MLP decodes
// [h_t; phi_t] into the raw kinematic state. Causal by construction.
class Regressor {
 public:
  Regressor() = default;
  static Regressor Create(const RegressorConfig& config, uint64_t seed);
  static Regressor FromCheckpoint(const nn::Checkpoint& ckpt);
  nn::Checkpoint ToCheckpoint() const;

  const RegressorConfig& config() const { return config_; }
  int out_dim() const { return KinematicState::RawDim(config_.dof); }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }

  nn::Mat RegressRaw(const FeatureSequence& features) const;
  std::vector<KinematicState> Regress(const FeatureSequence& features) const;

  // (1/T) sum_t |F_t - z_t|^2 over raw coordinates.
  double MseLoss(const FeatureSequence& features, const nn::Mat& targets) const;
  // Loss and its gradient, aligned with params().tensors.
  std::pair<double, nn::Grads> LossAndGrad(const FeatureSequence& features,
                                           const nn::Mat& targets,
                                           double scale = 1.0) const;

 private:
  void CheckShapes(const FeatureSequence& features) const;

  RegressorConfig config_;
  nn::ParamSet params_;
  nn::GruCell gru_;
  nn::Mlp decoder_;
};

struct RegressorSample {
  FeatureSequence features;
  nn::Mat targets;
};

struct RegressorHyper {
  int steps = 2000;
  int batch = 4;  // sequences per step
  nn::AdamConfig adam = {1e-3, 0.9, 0.999, 1e-8, 10.0};
  uint64_t seed = 0;
};

struct RegressorTrainResult {
  Regressor model;
  std::vector<double> loss_trace;  // mean batch loss per step
};

// Adam on minibatches of whole sequences. Throws ValidationError on an empty
// dataset and DivergenceError when the loss becomes non-finite. `on_step`
// (optional) sees (step, loss).
RegressorTrainResult TrainRegressor(
    const std::vector<RegressorSample>& dataset, const RegressorConfig& config,
    const RegressorHyper& hyper,
    const std::function<void(int, double)>& on_step = nullptr);

// Trailing moving average with the given window.
std::vector<double> Smooth(const std::vector<double>& xs, int window);

}  // namespace kinres

#endif  // KINRES_REGRESSOR_REGRESSOR_H_
