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

#include "kinres/nn/layers.h"

#include <cmath>

#include <fmt/format.h>

#include "kinres/core/error.h"

namespace kinres::nn {
namespace {

Mat Gaussian(int rows, int cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, cols);
  // Column-major fill order is part of the seed contract.
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = stddev * n(rng);
  return m;
}

int Expect(const ParamSet& params, const std::string& name, int rows,
           int cols) {
  const int i = params.Find(name);
  if (i < 0) throw ValidationError(fmt::format("missing tensor '{}'", name));
  const Mat& v = params.tensors[i].value;
  if (v.rows() != rows || v.cols() != cols) {
    throw ValidationError(fmt::format("tensor '{}' is {}x{}, expected {}x{}",
                                      name, v.rows(), v.cols(), rows, cols));
  }
  return i;
}

}  // namespace

Mlp Mlp::Create(ParamSet& params, const std::string& prefix,
                std::vector<int> sizes, std::mt19937_64& rng,
                double out_gain) {
  if (sizes.size() < 2) throw ValidationError("Mlp needs at least two sizes");
  Mlp m;
  m.sizes_ = std::move(sizes);
  m.first_ = params.size();
  const size_t layers = m.sizes_.size() - 1;
  for (size_t l = 0; l < layers; ++l) {
    const int in = m.sizes_[l];
    const int out = m.sizes_[l + 1];
    if (in <= 0 || out <= 0) throw ValidationError("Mlp sizes must be > 0");
    double stddev = 1.0 / std::sqrt(static_cast<double>(in));
    if (l + 1 == layers) stddev *= out_gain;
    params.Add(fmt::format("{}.W{}", prefix, l), Gaussian(out, in, stddev, rng));
    params.Add(fmt::format("{}.b{}", prefix, l), Mat::Zero(out, 1));
  }
  return m;
}

Mlp Mlp::Attach(const ParamSet& params, const std::string& prefix,
                std::vector<int> sizes) {
  if (sizes.size() < 2) throw ValidationError("Mlp needs at least two sizes");
  Mlp m;
  m.sizes_ = std::move(sizes);
  for (size_t l = 0; l + 1 < m.sizes_.size(); ++l) {
    const int w = Expect(params, fmt::format("{}.W{}", prefix, l),
                         m.sizes_[l + 1], m.sizes_[l]);
    const int b =
        Expect(params, fmt::format("{}.b{}", prefix, l), m.sizes_[l + 1], 1);
    if (l == 0) m.first_ = w;
    if (w != m.first_ + 2 * static_cast<int>(l) || b != w + 1) {
      throw ValidationError(
          fmt::format("tensors of '{}' are not stored contiguously", prefix));
    }
  }
  return m;
}

Mat Mlp::Forward(const ParamSet& params, const Mat& x) const {
  if (x.rows() != in_dim()) {
    throw ValidationError(fmt::format("Mlp input has {} rows, expected {}",
                                      x.rows(), in_dim()));
  }
  Mat h = x;
  const int layers = static_cast<int>(sizes_.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    const Mat& w = params.tensors[first_ + 2 * l].value;
    const Mat& b = params.tensors[first_ + 2 * l + 1].value;
    Mat y = w * h;
    y.colwise() += b.col(0);
    if (l + 1 < layers) y = y.array().tanh();
    h = std::move(y);
  }
  return h;
}

Var Mlp::Forward(Tape& tape, const std::vector<Var>& bound, Var x) const {
  if (tape.value(x).rows() != in_dim()) {
    throw ValidationError("Mlp input dimension mismatch");
  }
  Var h = x;
  const int layers = static_cast<int>(sizes_.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    h = AddBias(tape, MatMul(tape, bound[first_ + 2 * l], h),
                bound[first_ + 2 * l + 1]);
    if (l + 1 < layers) h = Tanh(tape, h);
  }
  return h;
}

GruCell GruCell::Create(ParamSet& params, const std::string& prefix,
                        int in_dim, int hidden, std::mt19937_64& rng) {
  if (in_dim <= 0 || hidden <= 0) throw ValidationError("bad GRU sizes");
  GruCell g;
  g.in_dim_ = in_dim;
  g.hidden_ = hidden;
  g.first_ = params.size();
  params.Add(prefix + ".W",
             Gaussian(3 * hidden, in_dim, 1.0 / std::sqrt(in_dim), rng));
  params.Add(prefix + ".U",
             Gaussian(3 * hidden, hidden, 1.0 / std::sqrt(hidden), rng));
  params.Add(prefix + ".b", Mat::Zero(3 * hidden, 1));
  params.Add(prefix + ".c", Mat::Zero(3 * hidden, 1));
  return g;
}

GruCell GruCell::Attach(const ParamSet& params, const std::string& prefix,
                        int in_dim, int hidden) {
  GruCell g;
  g.in_dim_ = in_dim;
  g.hidden_ = hidden;
  g.first_ = Expect(params, prefix + ".W", 3 * hidden, in_dim);
  if (Expect(params, prefix + ".U", 3 * hidden, hidden) != g.first_ + 1 ||
      Expect(params, prefix + ".b", 3 * hidden, 1) != g.first_ + 2 ||
      Expect(params, prefix + ".c", 3 * hidden, 1) != g.first_ + 3) {
    throw ValidationError(
        fmt::format("tensors of '{}' are not stored contiguously", prefix));
  }
  return g;
}

Mat GruCell::Step(const ParamSet& params, const Mat& x, const Mat& h) const {
  const int n = hidden_;
  Mat gx = params.tensors[first_].value * x;
  gx.colwise() += params.tensors[first_ + 2].value.col(0);
  Mat gh = params.tensors[first_ + 1].value * h;
  gh.colwise() += params.tensors[first_ + 3].value.col(0);
  auto sigmoid = [](const Mat& a) -> Mat {
    return (1.0 + (-a.array()).exp()).inverse();
  };
  const Mat z = sigmoid(gx.topRows(n) + gh.topRows(n));
  const Mat r = sigmoid(gx.middleRows(n, n) + gh.middleRows(n, n));
  const Mat cand = (gx.bottomRows(n).array() +
                    r.array() * gh.bottomRows(n).array()).tanh();
  return cand + z.cwiseProduct(h - cand);
}

Var GruCell::Step(Tape& t, const std::vector<Var>& bound, Var x, Var h) const {
  const int n = hidden_;
  Var gx = AddBias(t, MatMul(t, bound[first_], x), bound[first_ + 2]);
  Var gh = AddBias(t, MatMul(t, bound[first_ + 1], h), bound[first_ + 3]);
  Var z = Sigmoid(t, Add(t, Rows(t, gx, 0, n), Rows(t, gh, 0, n)));
  Var r = Sigmoid(t, Add(t, Rows(t, gx, n, n), Rows(t, gh, n, n)));
  Var cand = Tanh(t, Add(t, Rows(t, gx, 2 * n, n),
                         Mul(t, r, Rows(t, gh, 2 * n, n))));
  // (1 - z) * cand + z * h = cand + z * (h - cand)
  return Add(t, cand, Mul(t, z, Sub(t, h, cand)));
}

}  // namespace kinres::nn
