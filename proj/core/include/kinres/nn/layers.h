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

#ifndef KINRES_NN_LAYERS_H_
#define KINRES_NN_LAYERS_H_

#include <random>
#include <string>
#include <vector>

#include "kinres/nn/params.h"
#include "kinres/nn/tape.h"

namespace kinres::nn {

// Fully connected network, tanh on hidden layers and a linear output. Weights
// live in a ParamSet as <prefix>.W<i> and <prefix>.b<i>; the layer object only
// remembers where.
class Mlp {
 public:
  Mlp() = default;

  // Appends freshly initialized tensors. Hidden weights use N(0, 1/fan_in);
  // the output layer is additionally scaled by out_gain.
  static Mlp Create(ParamSet& params, const std::string& prefix,
                    std::vector<int> sizes, std::mt19937_64& rng,
                    double out_gain = 1.0);
  // Binds to existing tensors, checking their shapes.
  static Mlp Attach(const ParamSet& params, const std::string& prefix,
                    std::vector<int> sizes);

  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }

  Mat Forward(const ParamSet& params, const Mat& x) const;
  Var Forward(Tape& tape, const std::vector<Var>& bound, Var x) const;

 private:
  std::vector<int> sizes_;
  int first_ = 0;  // index of W0; tensors alternate W, b
};

// Gated recurrent cell:
//   z = sigmoid(Wz x + bz + Uz h + cz)    r = sigmoid(Wr x + br + Ur h + cr)
//   n = tanh(Wn x + bn + r * (Un h + cn)) h' = (1 - z) * n + z * h
// with gates stacked (z, r, n) in <prefix>.W, .U, .b, .c.
class GruCell {
 public:
  GruCell() = default;

  static GruCell Create(ParamSet& params, const std::string& prefix,
                        int in_dim, int hidden, std::mt19937_64& rng);
  static GruCell Attach(const ParamSet& params, const std::string& prefix,
                        int in_dim, int hidden);

  int in_dim() const { return in_dim_; }
  int hidden() const { return hidden_; }

  Mat Step(const ParamSet& params, const Mat& x, const Mat& h) const;
  Var Step(Tape& tape, const std::vector<Var>& bound, Var x, Var h) const;

 private:
  int in_dim_ = 0;
  int hidden_ = 0;
  int first_ = 0;  // W, U, b, c
};

}  // namespace kinres::nn

#endif  // KINRES_NN_LAYERS_H_
