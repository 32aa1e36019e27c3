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

#ifndef KINRES_RL_POLICY_H_
#define KINRES_RL_POLICY_H_

#include <cstdint>
#include <random>
#include <vector>

#include "kinres/core/quaternion.h"
#include "kinres/nn/layers.h"
#include "kinres/nn/params.h"

namespace kinres {

// Running mean and variance of observations (parallel-variance merge).
struct ObsNormalizer {
  VecX mean;
  VecX var;
  double count = 0.0;

  static ObsNormalizer Identity(int dim);
  // Columns are samples.
  void Update(const nn::Mat& batch);
  // (x - mean) / sqrt(var + 1e-8), clipped to +-10.
  VecX Apply(const VecX& x) const;
};

struct PolicyConfig {
  std::vector<int> hidden = {512, 256};
  double log_std = -1.0;   // fixed, every action dimension
  double out_gain = 0.01;  // initial scale of the mean's output layer
  double value_scale = 100.0;  // value head output is multiplied by this
};

// Gaussian policy with a fixed diagonal covariance and a separate value
// network on the same (normalized) observation. Parameters of both networks
// live in one ParamSet: "pi.*" then "vf.*".
class Policy {
 public:
  Policy() = default;
  static Policy Create(int obs_dim, int act_dim, const PolicyConfig& config,
                       uint64_t seed);

  int obs_dim() const { return pi_.in_dim(); }
  int act_dim() const { return pi_.out_dim(); }
  const PolicyConfig& config() const { return config_; }
  const VecX& log_std() const { return log_std_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  ObsNormalizer& normalizer() { return norm_; }
  const ObsNormalizer& normalizer() const { return norm_; }
  const nn::Mlp& pi() const { return pi_; }
  const nn::Mlp& vf() const { return vf_; }

  // Inputs are normalized observations.
  VecX Mean(const VecX& obs_norm) const;
  double Value(const VecX& obs_norm) const;
  nn::Mat MeanBatch(const nn::Mat& obs_norm) const;
  VecX ValueBatch(const nn::Mat& obs_norm) const;

  nn::Checkpoint ToCheckpoint() const;
  static Policy FromCheckpoint(const nn::Checkpoint& ckpt);

 private:
  PolicyConfig config_;
  nn::ParamSet params_;
  nn::Mlp pi_, vf_;
  VecX log_std_;
  ObsNormalizer norm_;
};

// log N(x; mean, diag(exp(log_std))^2).
double GaussianLogProb(const VecX& mean, const VecX& log_std, const VecX& x);

struct ActionSample {
  VecX action;
  VecX mean;
  double log_prob = 0.0;
};

// Stochastic: mean + sigma * N(0, I) drawn from rng; deterministic: the mean.
ActionSample SampleAction(const Policy& policy, const VecX& obs_norm,
                          bool stochastic, std::mt19937_64& rng);

}  // namespace kinres

#endif  // KINRES_RL_POLICY_H_
