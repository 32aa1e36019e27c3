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

#include "kinres/rl/policy.h"

#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "kinres/core/clip_io.h"
#include "kinres/core/error.h"

namespace kinres {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

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

std::vector<int> Sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s = {in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

}  // namespace

ObsNormalizer ObsNormalizer::Identity(int dim) {
  return {VecX::Zero(dim), VecX::Ones(dim), 0.0};
}

void ObsNormalizer::Update(const nn::Mat& batch) {
  if (batch.cols() == 0) return;
  if (batch.rows() != mean.size()) {
    throw ValidationError("normalizer update has the wrong dimension");
  }
  const double n = static_cast<double>(batch.cols());
  const VecX bmean = batch.rowwise().mean();
  const VecX bvar =
      (batch.colwise() - bmean).array().square().rowwise().sum() / n;
  if (count == 0.0) {
    mean = bmean;
    var = bvar;
    count = n;
    return;
  }
  const double total = count + n;
  const VecX delta = bmean - mean;
  mean += delta * (n / total);
  var = (var * count + bvar * n + delta.cwiseAbs2() * (count * n / total)) / total;
  count = total;
}

VecX ObsNormalizer::Apply(const VecX& x) const {
  VecX y = (x - mean).array() / (var.array() + 1e-8).sqrt();
  return y.cwiseMax(-10.0).cwiseMin(10.0);
}

Policy Policy::Create(int obs_dim, int act_dim, const PolicyConfig& config,
                      uint64_t seed) {
  if (obs_dim <= 0 || act_dim <= 0) {
    throw ValidationError("policy dimensions must be positive");
  }
  Policy p;
  p.config_ = config;
  std::mt19937_64 rng(seed);
  p.pi_ = nn::Mlp::Create(p.params_, "pi", Sizes(obs_dim, config.hidden, act_dim),
                          rng, config.out_gain);
  p.vf_ = nn::Mlp::Create(p.params_, "vf", Sizes(obs_dim, config.hidden, 1), rng,
                          1.0);
  p.log_std_ = VecX::Constant(act_dim, config.log_std);
  p.norm_ = ObsNormalizer::Identity(obs_dim);
  return p;
}

VecX Policy::Mean(const VecX& obs_norm) const {
  return pi_.Forward(params_, obs_norm);
}

double Policy::Value(const VecX& obs_norm) const {
  return config_.value_scale * vf_.Forward(params_, obs_norm)(0, 0);
}

nn::Mat Policy::MeanBatch(const nn::Mat& obs_norm) const {
  return pi_.Forward(params_, obs_norm);
}

VecX Policy::ValueBatch(const nn::Mat& obs_norm) const {
  return config_.value_scale * vf_.Forward(params_, obs_norm).row(0).transpose();
}

nn::Checkpoint Policy::ToCheckpoint() const {
  nn::Checkpoint c;
  c.kind = "policy";
  c.meta["obs_dim"] = std::to_string(obs_dim());
  c.meta["act_dim"] = std::to_string(act_dim());
  c.meta["hidden"] = JoinInts(config_.hidden);
  c.meta["log_std"] = FormatReal(config_.log_std);
  c.meta["out_gain"] = FormatReal(config_.out_gain);
  c.meta["value_scale"] = FormatReal(config_.value_scale);
  c.meta["norm_count"] = FormatReal(norm_.count);
  c.params = params_;
  c.params.Add("log_std", log_std_);
  c.params.Add("norm.mean", norm_.mean);
  c.params.Add("norm.var", norm_.var);
  return c;
}

Policy Policy::FromCheckpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != "policy") {
    throw ValidationError(
        fmt::format("checkpoint kind '{}' is not a policy", ckpt.kind));
  }
  auto get = [&](const std::string& k) {
    auto it = ckpt.meta.find(k);
    if (it == ckpt.meta.end()) {
      throw ValidationError(fmt::format("policy checkpoint lacks '{}'", k));
    }
    return it->second;
  };
  Policy p;
  const int obs_dim = std::stoi(get("obs_dim"));
  const int act_dim = std::stoi(get("act_dim"));
  p.config_.hidden = SplitInts(get("hidden"));
  p.config_.log_std = std::stod(get("log_std"));
  p.config_.out_gain = std::stod(get("out_gain"));
  p.config_.value_scale = std::stod(get("value_scale"));
  for (const auto& t : ckpt.params.tensors) {
    if (t.name.rfind("pi.", 0) == 0 || t.name.rfind("vf.", 0) == 0) {
      p.params_.Add(t.name, t.value);
    }
  }
  p.pi_ = nn::Mlp::Attach(p.params_, "pi", Sizes(obs_dim, p.config_.hidden, act_dim));
  p.vf_ = nn::Mlp::Attach(p.params_, "vf", Sizes(obs_dim, p.config_.hidden, 1));
  p.log_std_ = ckpt.params.Get("log_std");
  p.norm_.mean = ckpt.params.Get("norm.mean");
  p.norm_.var = ckpt.params.Get("norm.var");
  p.norm_.count = std::stod(get("norm_count"));
  if (p.log_std_.size() != act_dim || p.norm_.mean.size() != obs_dim ||
      p.norm_.var.size() != obs_dim) {
    throw ValidationError("policy checkpoint tensors have inconsistent sizes");
  }
  if (!p.params_.AllFinite()) {
    throw ValidationError("policy checkpoint holds non-finite values");
  }
  return p;
}

double GaussianLogProb(const VecX& mean, const VecX& log_std, const VecX& x) {
  if (mean.size() != x.size() || log_std.size() != x.size()) {
    throw ValidationError("Gaussian log-prob: length mismatch");
  }
  const VecX z = (x - mean).array() / log_std.array().exp();
  return -0.5 * z.squaredNorm() - log_std.sum() -
         0.5 * static_cast<double>(x.size()) * kLog2Pi;
}

ActionSample SampleAction(const Policy& policy, const VecX& obs_norm,
                          bool stochastic, std::mt19937_64& rng) {
  ActionSample s;
  s.mean = policy.Mean(obs_norm);
  s.action = s.mean;
  if (stochastic) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < s.action.size(); ++i) {
      s.action[i] += std::exp(policy.log_std()[i]) * normal(rng);
    }
  }
  s.log_prob = GaussianLogProb(s.mean, policy.log_std(), s.action);
  return s;
}

}  // namespace kinres
