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

#include "kinres/regressor/regressor.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "kinres/core/error.h"

namespace kinres {

using nn::Mat;
using nn::Tape;
using nn::Var;

VecX KinematicState::ToRaw() const {
  const int dof = static_cast<int>(joint_angles.size());
  if (joint_vel.size() != dof) {
    throw ValidationError("KinematicState: joint_vel length differs");
  }
  VecX raw(RawDim(dof));
  Eigen::Vector4d q = root_rot.Coeffs();
  if (q[0] < 0.0) q = -q;
  raw.segment<2>(0) = root_xy;
  raw.segment<4>(2) = q;
  raw.segment(6, dof) = joint_angles;
  raw.segment<3>(6 + dof) = root_lin;
  raw.segment<3>(9 + dof) = root_ang;
  raw.segment(12 + dof, dof) = joint_vel;
  return raw;
}

KinematicState KinematicState::FromRaw(const VecX& raw, int dof) {
  if (raw.size() != RawDim(dof)) {
    throw ValidationError(fmt::format(
        "raw kinematic state has {} entries, expected {}", raw.size(),
        RawDim(dof)));
  }
  KinematicState s;
  s.root_xy = raw.segment<2>(0);
  const Eigen::Vector4d q = raw.segment<4>(2);
  s.root_rot = UnitQuaternion::NormalizeOrIdentity(q[0], q[1], q[2], q[3]);
  s.joint_angles = raw.segment(6, dof);
  s.root_lin = raw.segment<3>(6 + dof);
  s.root_ang = raw.segment<3>(9 + dof);
  s.joint_vel = raw.segment(12 + dof, dof);
  return s;
}

KinematicState KinematicState::FromFrame(const Frame& frame) {
  KinematicState s;
  s.root_xy = frame.pose.root_pos.head<2>();
  s.root_rot = frame.pose.root_rot;
  s.joint_angles = frame.pose.joint_angles;
  s.root_lin = frame.vel.root_lin;
  s.root_ang = frame.vel.root_ang;
  s.joint_vel = frame.vel.joint_vel;
  if (s.joint_vel.size() != s.joint_angles.size()) {
    s.joint_vel = VecX::Zero(s.joint_angles.size());
  }
  return s;
}

std::pair<Pose, Velocity> KinematicState::Decode(
    const sim::HumanoidModel& model) const {
  if (joint_angles.size() != model.dof()) {
    throw ValidationError("KinematicState DoF differs from the model");
  }
  Pose pose;
  Velocity vel;
  pose.joint_angles = joint_angles;
  vel.joint_vel = joint_vel;
  if (model.fixed_base) {
    pose.root_pos = model.base.translation;
    pose.root_rot = model.base.rotation;
  } else {
    pose.root_pos = Vec3(root_xy.x(), root_xy.y(), 0.0);
    pose.root_rot = root_rot;
    pose.root_pos.z() = sim::GroundedRootHeight(model, pose);
    vel.root_lin = root_lin;
    vel.root_ang = root_ang;
  }
  return {pose, vel};
}

Mat RawTargets(const MotionClip& clip) {
  Mat out(KinematicState::RawDim(clip.dof()), clip.num_frames());
  for (int t = 0; t < clip.num_frames(); ++t) {
    out.col(t) = KinematicState::FromFrame(clip.frames[t]).ToRaw();
  }
  return out;
}

namespace {

std::string JoinInts(const std::vector<int>& xs) {
  std::string s;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) s += ',';
    s += std::to_string(xs[i]);
  }
  return s;
}

std::vector<int> SplitInts(const std::string& s) {
  std::vector<int> xs;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) xs.push_back(std::stoi(tok));
  }
  return xs;
}

std::vector<int> DecoderSizes(const RegressorConfig& c) {
  std::vector<int> sizes = {c.hidden + c.feature_dim};
  sizes.insert(sizes.end(), c.decoder_hidden.begin(), c.decoder_hidden.end());
  sizes.push_back(KinematicState::RawDim(c.dof));
  return sizes;
}

}  // namespace

Regressor Regressor::Create(const RegressorConfig& config, uint64_t seed) {
  if (config.feature_dim <= 0 || config.dof <= 0 || config.hidden <= 0) {
    throw ValidationError("regressor sizes must be positive");
  }
  Regressor r;
  r.config_ = config;
  std::mt19937_64 rng(seed);
  r.gru_ = nn::GruCell::Create(r.params_, "gru", config.feature_dim,
                               config.hidden, rng);
  r.decoder_ =
      nn::Mlp::Create(r.params_, "decoder", DecoderSizes(config), rng, 0.1);
  return r;
}

Regressor Regressor::FromCheckpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != "regressor") {
    throw ValidationError(
        fmt::format("checkpoint kind '{}' is not a regressor", ckpt.kind));
  }
  auto get = [&](const std::string& k) {
    auto it = ckpt.meta.find(k);
    if (it == ckpt.meta.end()) {
      throw ValidationError(fmt::format("regressor checkpoint lacks '{}'", k));
    }
    return it->second;
  };
  Regressor r;
  r.config_.feature_dim = std::stoi(get("feature_dim"));
  r.config_.dof = std::stoi(get("dof"));
  r.config_.hidden = std::stoi(get("hidden"));
  r.config_.decoder_hidden = SplitInts(get("decoder_hidden"));
  r.params_ = ckpt.params;
  r.gru_ = nn::GruCell::Attach(r.params_, "gru", r.config_.feature_dim,
                               r.config_.hidden);
  r.decoder_ = nn::Mlp::Attach(r.params_, "decoder", DecoderSizes(r.config_));
  if (!r.params_.AllFinite()) {
    throw ValidationError("regressor checkpoint holds non-finite values");
  }
  return r;
}

nn::Checkpoint Regressor::ToCheckpoint() const {
  nn::Checkpoint c;
  c.kind = "regressor";
  c.meta["feature_dim"] = std::to_string(config_.feature_dim);
  c.meta["dof"] = std::to_string(config_.dof);
  c.meta["hidden"] = std::to_string(config_.hidden);
  c.meta["decoder_hidden"] = JoinInts(config_.decoder_hidden);
  c.params = params_;
  return c;
}

void Regressor::CheckShapes(const FeatureSequence& features) const {
  if (features.dim() != config_.feature_dim) {
    throw ValidationError(fmt::format("feature dimension {} != regressor {}",
                                      features.dim(), config_.feature_dim));
  }
  if (features.length() < 1) throw ValidationError("empty feature sequence");
}

Mat Regressor::RegressRaw(const FeatureSequence& features) const {
  CheckShapes(features);
  const int t_len = features.length();
  Mat hs(config_.hidden, t_len);
  Mat h = Mat::Zero(config_.hidden, 1);
  for (int t = 0; t < t_len; ++t) {
    h = gru_.Step(params_, features.values.col(t), h);
    hs.col(t) = h;
  }
  Mat x(config_.hidden + config_.feature_dim, t_len);
  x << hs, features.values;
  return decoder_.Forward(params_, x);
}

std::vector<KinematicState> Regressor::Regress(
    const FeatureSequence& features) const {
  const Mat raw = RegressRaw(features);
  std::vector<KinematicState> out;
  out.reserve(raw.cols());
  for (Eigen::Index t = 0; t < raw.cols(); ++t) {
    out.push_back(KinematicState::FromRaw(raw.col(t), config_.dof));
  }
  return out;
}

double Regressor::MseLoss(const FeatureSequence& features,
                          const Mat& targets) const {
  if (targets.cols() != features.length() || targets.rows() != out_dim()) {
    throw ValidationError(fmt::format(
        "targets are {}x{}, expected {}x{}", targets.rows(), targets.cols(),
        out_dim(), features.length()));
  }
  const Mat out = RegressRaw(features);
  return (out - targets).squaredNorm() / static_cast<double>(out.cols());
}

std::pair<double, nn::Grads> Regressor::LossAndGrad(
    const FeatureSequence& features, const Mat& targets, double scale) const {
  CheckShapes(features);
  if (targets.cols() != features.length() || targets.rows() != out_dim()) {
    throw ValidationError("targets do not match the feature sequence");
  }
  Tape tape;
  const auto bound = nn::Bind(tape, params_);
  const int t_len = features.length();
  Var h = tape.Leaf(Mat::Zero(config_.hidden, 1));
  std::vector<Var> hs;
  hs.reserve(t_len);
  for (int t = 0; t < t_len; ++t) {
    h = gru_.Step(tape, bound, tape.Leaf(features.values.col(t)), h);
    hs.push_back(h);
  }
  Var x = nn::VStack(tape, nn::HStack(tape, hs), tape.Leaf(features.values));
  Var out = decoder_.Forward(tape, bound, x);
  Var loss = nn::Scale(
      tape, nn::Sum(tape, nn::Square(tape, nn::Sub(tape, out, tape.Leaf(targets)))),
      1.0 / t_len);
  tape.Backward(loss, scale);
  return {tape.value(loss)(0, 0), nn::CollectGrads(tape, bound)};
}

RegressorTrainResult TrainRegressor(
    const std::vector<RegressorSample>& dataset, const RegressorConfig& config,
    const RegressorHyper& hyper,
    const std::function<void(int, double)>& on_step) {
  if (dataset.empty()) throw ValidationError("regressor dataset is empty");
  if (hyper.batch < 1 || hyper.steps < 0) {
    throw ValidationError("regressor batch must be >= 1 and steps >= 0");
  }
  RegressorTrainResult result;
  result.model = Regressor::Create(config, hyper.seed);
  Regressor& model = result.model;
  nn::Adam adam(model.params(), hyper.adam);
  std::mt19937_64 rng(hyper.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();
  const int batch = std::min<int>(hyper.batch, static_cast<int>(dataset.size()));
  for (int step = 0; step < hyper.steps; ++step) {
    nn::Grads total;
    double loss = 0.0;
    for (int b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const RegressorSample& s = dataset[order[cursor++]];
      auto [l, g] = model.LossAndGrad(s.features, s.targets, 1.0 / batch);
      loss += l / batch;
      nn::AddGrads(total, g);
    }
    if (!std::isfinite(loss) || !std::isfinite(nn::GlobalNorm(total))) {
      throw DivergenceError(fmt::format(
          "regressor training diverged at step {} (loss {}, last finite {})",
          step, loss,
          result.loss_trace.empty() ? 0.0 : result.loss_trace.back()));
    }
    result.loss_trace.push_back(loss);
    adam.Step(model.params(), std::move(total));
    if (on_step) on_step(step, loss);
  }
  return result;
}

std::vector<double> Smooth(const std::vector<double>& xs, int window) {
  if (window < 1) throw ValidationError("smoothing window must be >= 1");
  std::vector<double> out(xs.size());
  double acc = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    if (i >= static_cast<size_t>(window)) acc -= xs[i - window];
    out[i] = acc / static_cast<double>(std::min<size_t>(i + 1, window));
  }
  return out;
}

}  // namespace kinres
