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

#ifndef KINRES_NN_PARAMS_H_
#define KINRES_NN_PARAMS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "kinres/nn/tape.h"

namespace kinres::nn {

struct Tensor {
  std::string name;
  Mat value;
};

// Ordered, named parameter tensors. Gradients are vectors of matrices aligned
// with `tensors`.
struct ParamSet {
  std::vector<Tensor> tensors;

  int size() const { return static_cast<int>(tensors.size()); }
  // Appends a tensor; throws ValidationError on duplicate names.
  int Add(const std::string& name, Mat value);
  // -1 when absent.
  int Find(const std::string& name) const;
  const Mat& Get(const std::string& name) const;  // throws when absent
  int64_t NumScalars() const;
  bool AllFinite() const;
  std::vector<Mat> Zeros() const;

  Eigen::VectorXd Flatten() const;
  void Unflatten(const Eigen::VectorXd& flat);

  bool operator==(const ParamSet& o) const;
};

using Grads = std::vector<Mat>;

// Creates one tape leaf per tensor, index-aligned with params.tensors.
std::vector<Var> Bind(Tape& tape, const ParamSet& params);
Grads CollectGrads(const Tape& tape, const std::vector<Var>& bound);
double GlobalNorm(const Grads& g);
void ScaleGrads(Grads& g, double s);
void AddGrads(Grads& acc, const Grads& g);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double max_grad_norm = 0.0;  // <= 0 disables clipping
};

class Adam {
 public:
  Adam() = default;
  Adam(const ParamSet& params, AdamConfig config);

  void Step(ParamSet& params, Grads grads);
  int64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }

  // Moments and step count as tensors named <prefix>.t, <prefix>.m<i>,
  // <prefix>.v<i>, for checkpointing.
  void ExportState(ParamSet& out, const std::string& prefix) const;
  // Throws ValidationError when the tensors are missing or misshapen.
  void ImportState(const ParamSet& in, const std::string& prefix);

 private:
  AdamConfig config_;
  int64_t t_ = 0;
  std::vector<Mat> m_, v_;
};

// Text checkpoint: a string metadata map plus tensors, every number written
// with 17 significant digits so that loading restores the exact bits.
struct Checkpoint {
  std::string kind;
  std::map<std::string, std::string> meta;
  ParamSet params;
};

void WriteCheckpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint ReadCheckpoint(std::istream& in, const std::string& source);
void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace kinres::nn

#endif  // KINRES_NN_PARAMS_H_
