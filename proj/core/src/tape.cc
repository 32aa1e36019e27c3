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

#include "kinres/nn/tape.h"

#include <utility>

#include "kinres/core/error.h"

namespace kinres::nn {

Var Tape::Leaf(Mat value) { return Push(std::move(value), nullptr); }

Var Tape::Push(Mat value, BackwardFn backward) {
  Node n;
  n.grad = Mat::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

void Tape::Backward(Var out, double scale) {
  if (nodes_[out.id].value.size() != 1) {
    throw ValidationError("Tape::Backward needs a scalar output");
  }
  nodes_[out.id].grad(0, 0) += scale;
  for (int i = out.id; i >= 0; --i) {
    if (nodes_[i].backward) nodes_[i].backward(*this, i);
  }
}

namespace {

void CheckSame(const Tape& t, Var a, Var b, const char* op) {
  if (t.value(a).rows() != t.value(b).rows() ||
      t.value(a).cols() != t.value(b).cols()) {
    throw ValidationError(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var MatMul(Tape& t, Var a, Var b) {
  if (t.value(a).cols() != t.value(b).rows()) {
    throw ValidationError("MatMul: inner dimensions differ");
  }
  Mat v = t.value(a) * t.value(b);
  return t.Push(std::move(v), [a, b](Tape& t, int self) {
    const Mat& g = t.grad(self);
    t.mutable_grad(a.id).noalias() += g * t.value(b).transpose();
    t.mutable_grad(b.id).noalias() += t.value(a).transpose() * g;
  });
}

Var Add(Tape& t, Var a, Var b) {
  CheckSame(t, a, b, "Add");
  return t.Push(t.value(a) + t.value(b), [a, b](Tape& t, int self) {
    t.mutable_grad(a.id) += t.grad(self);
    t.mutable_grad(b.id) += t.grad(self);
  });
}

Var Sub(Tape& t, Var a, Var b) {
  CheckSame(t, a, b, "Sub");
  return t.Push(t.value(a) - t.value(b), [a, b](Tape& t, int self) {
    t.mutable_grad(a.id) += t.grad(self);
    t.mutable_grad(b.id) -= t.grad(self);
  });
}

Var AddBias(Tape& t, Var a, Var bias) {
  if (t.value(bias).cols() != 1 || t.value(bias).rows() != t.value(a).rows()) {
    throw ValidationError("AddBias: bias must be a column matching rows");
  }
  Mat v = t.value(a).colwise() + t.value(bias).col(0);
  return t.Push(std::move(v), [a, bias](Tape& t, int self) {
    t.mutable_grad(a.id) += t.grad(self);
    t.mutable_grad(bias.id) += t.grad(self).rowwise().sum();
  });
}

Var Mul(Tape& t, Var a, Var b) {
  CheckSame(t, a, b, "Mul");
  Mat v = t.value(a).cwiseProduct(t.value(b));
  return t.Push(std::move(v), [a, b](Tape& t, int self) {
    t.mutable_grad(a.id) += t.grad(self).cwiseProduct(t.value(b));
    t.mutable_grad(b.id) += t.grad(self).cwiseProduct(t.value(a));
  });
}

Var Scale(Tape& t, Var a, double s) {
  return t.Push(t.value(a) * s, [a, s](Tape& t, int self) {
    t.mutable_grad(a.id) += s * t.grad(self);
  });
}

Var AddScalar(Tape& t, Var a, double s) {
  Mat v = t.value(a).array() + s;
  return t.Push(std::move(v), [a](Tape& t, int self) {
    t.mutable_grad(a.id) += t.grad(self);
  });
}

Var Tanh(Tape& t, Var a) {
  Mat v = t.value(a).array().tanh();
  return t.Push(std::move(v), [a](Tape& t, int self) {
    const Mat& y = t.value(self);
    t.mutable_grad(a.id).array() +=
        t.grad(self).array() * (1.0 - y.array().square());
  });
}

Var Sigmoid(Tape& t, Var a) {
  Mat v = (1.0 + (-t.value(a).array()).exp()).inverse();
  return t.Push(std::move(v), [a](Tape& t, int self) {
    const Mat& y = t.value(self);
    t.mutable_grad(a.id).array() +=
        t.grad(self).array() * y.array() * (1.0 - y.array());
  });
}

Var Exp(Tape& t, Var a) {
  Mat v = t.value(a).array().exp();
  return t.Push(std::move(v), [a](Tape& t, int self) {
    t.mutable_grad(a.id).array() += t.grad(self).array() * t.value(self).array();
  });
}

Var Min(Tape& t, Var a, Var b) {
  CheckSame(t, a, b, "Min");
  Mat v = t.value(a).cwiseMin(t.value(b));
  return t.Push(std::move(v), [a, b](Tape& t, int self) {
    const Mat& va = t.value(a);
    const Mat& vb = t.value(b);
    const Mat& g = t.grad(self);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (va(i) <= vb(i)) {
        t.mutable_grad(a.id)(i) += g(i);
      } else {
        t.mutable_grad(b.id)(i) += g(i);
      }
    }
  });
}

Var Clamp(Tape& t, Var a, double lo, double hi) {
  Mat v = t.value(a).cwiseMax(lo).cwiseMin(hi);
  return t.Push(std::move(v), [a, lo, hi](Tape& t, int self) {
    const Mat& x = t.value(a);
    const Mat& g = t.grad(self);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (x(i) > lo && x(i) < hi) t.mutable_grad(a.id)(i) += g(i);
    }
  });
}

Var Square(Tape& t, Var a) {
  Mat v = t.value(a).array().square();
  return t.Push(std::move(v), [a](Tape& t, int self) {
    t.mutable_grad(a.id).array() +=
        2.0 * t.grad(self).array() * t.value(a).array();
  });
}

Var Sum(Tape& t, Var a) {
  Mat v(1, 1);
  v(0, 0) = t.value(a).sum();
  return t.Push(std::move(v), [a](Tape& t, int self) {
    t.mutable_grad(a.id).array() += t.grad(self)(0, 0);
  });
}

Var ColSum(Tape& t, Var a) {
  Mat v = t.value(a).colwise().sum();
  return t.Push(std::move(v), [a](Tape& t, int self) {
    t.mutable_grad(a.id).rowwise() += t.grad(self).row(0);
  });
}

Var Mean(Tape& t, Var a) {
  const double n = static_cast<double>(t.value(a).size());
  Mat v(1, 1);
  v(0, 0) = t.value(a).sum() / n;
  return t.Push(std::move(v), [a, n](Tape& t, int self) {
    t.mutable_grad(a.id).array() += t.grad(self)(0, 0) / n;
  });
}

Var Rows(Tape& t, Var a, int begin, int count) {
  if (begin < 0 || count < 0 || begin + count > t.value(a).rows()) {
    throw ValidationError("Rows: range out of bounds");
  }
  Mat v = t.value(a).middleRows(begin, count);
  return t.Push(std::move(v), [a, begin, count](Tape& t, int self) {
    t.mutable_grad(a.id).middleRows(begin, count) += t.grad(self);
  });
}

Var VStack(Tape& t, Var a, Var b) {
  if (t.value(a).cols() != t.value(b).cols()) {
    throw ValidationError("VStack: column counts differ");
  }
  const Eigen::Index ra = t.value(a).rows();
  Mat v(ra + t.value(b).rows(), t.value(a).cols());
  v << t.value(a), t.value(b);
  return t.Push(std::move(v), [a, b, ra](Tape& t, int self) {
    const Mat& g = t.grad(self);
    t.mutable_grad(a.id) += g.topRows(ra);
    t.mutable_grad(b.id) += g.bottomRows(g.rows() - ra);
  });
}

Var HStack(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw ValidationError("HStack: no inputs");
  const Eigen::Index rows = t.value(parts.front()).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (t.value(p).rows() != rows) {
      throw ValidationError("HStack: row counts differ");
    }
    cols += t.value(p).cols();
  }
  Mat v(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    v.middleCols(c, t.value(p).cols()) = t.value(p);
    c += t.value(p).cols();
  }
  return t.Push(std::move(v), [parts](Tape& t, int self) {
    Eigen::Index c = 0;
    for (Var p : parts) {
      const Eigen::Index n = t.value(p).cols();
      t.mutable_grad(p.id) += t.grad(self).middleCols(c, n);
      c += n;
    }
  });
}

}  // namespace kinres::nn
