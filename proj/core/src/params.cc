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

#include "kinres/nn/params.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

#include <fmt/format.h>

#include "kinres/core/clip_io.h"
#include "kinres/core/error.h"

namespace kinres::nn {

int ParamSet::Add(const std::string& name, Mat value) {
  if (Find(name) >= 0) {
    throw ValidationError(fmt::format("duplicate parameter '{}'", name));
  }
  tensors.push_back({name, std::move(value)});
  return size() - 1;
}

int ParamSet::Find(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (tensors[i].name == name) return i;
  }
  return -1;
}

const Mat& ParamSet::Get(const std::string& name) const {
  const int i = Find(name);
  if (i < 0) throw ValidationError(fmt::format("no parameter '{}'", name));
  return tensors[i].value;
}

int64_t ParamSet::NumScalars() const {
  int64_t n = 0;
  for (const auto& t : tensors) n += t.value.size();
  return n;
}

bool ParamSet::AllFinite() const {
  for (const auto& t : tensors) {
    if (!t.value.allFinite()) return false;
  }
  return true;
}

std::vector<Mat> ParamSet::Zeros() const {
  std::vector<Mat> z;
  z.reserve(tensors.size());
  for (const auto& t : tensors) {
    z.push_back(Mat::Zero(t.value.rows(), t.value.cols()));
  }
  return z;
}

Eigen::VectorXd ParamSet::Flatten() const {
  Eigen::VectorXd flat(NumScalars());
  Eigen::Index k = 0;
  for (const auto& t : tensors) {
    flat.segment(k, t.value.size()) =
        Eigen::Map<const Eigen::VectorXd>(t.value.data(), t.value.size());
    k += t.value.size();
  }
  return flat;
}

void ParamSet::Unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != NumScalars()) {
    throw ValidationError("Unflatten: size mismatch");
  }
  Eigen::Index k = 0;
  for (auto& t : tensors) {
    Eigen::Map<Eigen::VectorXd>(t.value.data(), t.value.size()) =
        flat.segment(k, t.value.size());
    k += t.value.size();
  }
}

bool ParamSet::operator==(const ParamSet& o) const {
  if (size() != o.size()) return false;
  for (int i = 0; i < size(); ++i) {
    const auto& a = tensors[i];
    const auto& b = o.tensors[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols() || a.value != b.value) {
      return false;
    }
  }
  return true;
}

std::vector<Var> Bind(Tape& tape, const ParamSet& params) {
  std::vector<Var> vars;
  vars.reserve(params.tensors.size());
  for (const auto& t : params.tensors) vars.push_back(tape.Leaf(t.value));
  return vars;
}

Grads CollectGrads(const Tape& tape, const std::vector<Var>& bound) {
  Grads g;
  g.reserve(bound.size());
  for (Var v : bound) g.push_back(tape.grad(v));
  return g;
}

double GlobalNorm(const Grads& g) {
  double s = 0.0;
  for (const auto& m : g) s += m.squaredNorm();
  return std::sqrt(s);
}

void ScaleGrads(Grads& g, double s) {
  for (auto& m : g) m *= s;
}

void AddGrads(Grads& acc, const Grads& g) {
  if (acc.empty()) {
    acc = g;
    return;
  }
  for (size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

Adam::Adam(const ParamSet& params, AdamConfig config)
    : config_(config), m_(params.Zeros()), v_(params.Zeros()) {}

void Adam::Step(ParamSet& params, Grads grads) {
  if (grads.size() != params.tensors.size() || m_.size() != grads.size()) {
    throw ValidationError("Adam::Step: gradient count mismatch");
  }
  if (config_.max_grad_norm > 0.0) {
    const double norm = GlobalNorm(grads);
    if (norm > config_.max_grad_norm) {
      ScaleGrads(grads, config_.max_grad_norm / norm);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < grads.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] +
            (1.0 - config_.beta2) * grads[i].cwiseAbs2();
    params.tensors[i].value.array() -=
        config_.lr * (m_[i].array() / c1) /
        ((v_[i].array() / c2).sqrt() + config_.eps);
  }
}

void Adam::ExportState(ParamSet& out, const std::string& prefix) const {
  Mat t(1, 1);
  t(0, 0) = static_cast<double>(t_);
  out.Add(prefix + ".t", t);
  for (size_t i = 0; i < m_.size(); ++i) {
    out.Add(fmt::format("{}.m{}", prefix, i), m_[i]);
    out.Add(fmt::format("{}.v{}", prefix, i), v_[i]);
  }
}

void Adam::ImportState(const ParamSet& in, const std::string& prefix) {
  const Mat& t = in.Get(prefix + ".t");
  if (t.size() != 1 || t(0, 0) < 0.0) {
    throw ValidationError("bad optimizer step count");
  }
  for (size_t i = 0; i < m_.size(); ++i) {
    const Mat& m = in.Get(fmt::format("{}.m{}", prefix, i));
    const Mat& v = in.Get(fmt::format("{}.v{}", prefix, i));
    if (m.rows() != m_[i].rows() || m.cols() != m_[i].cols() ||
        v.rows() != v_[i].rows() || v.cols() != v_[i].cols()) {
      throw ValidationError("optimizer state does not match the parameters");
    }
    m_[i] = m;
    v_[i] = v;
  }
  t_ = static_cast<int64_t>(t(0, 0));
}

void WriteCheckpoint(const Checkpoint& ckpt, std::ostream& out) {
  out << "kinres-checkpoint 1\n";
  out << "kind " << ckpt.kind << '\n';
  for (const auto& [k, v] : ckpt.meta) {
    if (k.find_first_of(" \n") != std::string::npos ||
        v.find('\n') != std::string::npos) {
      throw ValidationError(fmt::format("bad checkpoint metadata key '{}'", k));
    }
    out << "meta " << k << ' ' << v << '\n';
  }
  for (const auto& t : ckpt.params.tensors) {
    out << "tensor " << t.name << ' ' << t.value.rows() << ' '
        << t.value.cols() << '\n';
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      std::string line;
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
        if (c > 0) line += ' ';
        line += FormatReal(t.value(r, c));
      }
      out << line << '\n';
    }
  }
  out << "end\n";
}

Checkpoint ReadCheckpoint(std::istream& in, const std::string& source) {
  Checkpoint ckpt;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    return ParseError(fmt::format("{}:{}: {}", source, lineno, what));
  };
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    return true;
  };
  if (!next() || line != "kinres-checkpoint 1") {
    throw fail("not a kinres checkpoint (expected 'kinres-checkpoint 1')");
  }
  if (!next() || line.rfind("kind ", 0) != 0) throw fail("missing kind");
  ckpt.kind = line.substr(5);
  bool ended = false;
  while (next()) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ckpt.meta[key] = value;
    } else if (tag == "tensor") {
      std::string name;
      long rows = -1, cols = -1;
      ls >> name >> rows >> cols;
      if (!ls || rows < 0 || cols < 0) throw fail("bad tensor header");
      Mat m(rows, cols);
      for (long r = 0; r < rows; ++r) {
        if (!next()) throw fail("truncated tensor '" + name + "'");
        std::istringstream rs(line);
        for (long c = 0; c < cols; ++c) {
          std::string tok;
          if (!(rs >> tok)) throw fail("short row in tensor '" + name + "'");
          char* endp = nullptr;
          m(r, c) = std::strtod(tok.c_str(), &endp);
          if (*endp != '\0' || !std::isfinite(m(r, c))) {
            throw fail("bad number '" + tok + "'");
          }
        }
        std::string extra;
        if (rs >> extra) throw fail("long row in tensor '" + name + "'");
      }
      try {
        ckpt.params.Add(name, std::move(m));
      } catch (const ValidationError& e) {
        throw fail(e.what());
      }
    } else {
      throw fail("unknown record '" + tag + "'");
    }
  }
  if (!ended) throw fail("missing 'end'");
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  WriteCheckpoint(ckpt, out);
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  return ReadCheckpoint(in, path.string());
}

}  // namespace kinres::nn
