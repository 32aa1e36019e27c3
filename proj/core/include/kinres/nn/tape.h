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

#ifndef KINRES_NN_TAPE_H_
#define KINRES_NN_TAPE_H_

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace kinres::nn {

using Mat = Eigen::MatrixXd;

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
};

// Reverse-mode autodiff over dense matrices. Batches are stored as columns.
// Record a forward pass through the free functions below, call Backward on a
// 1x1 result, then read gradients of the leaves. A tape is single-use and not
// thread-safe; build one per forward pass.
class Tape {
 public:
  // Input or parameter. Gradients are accumulated for every node.
  Var Leaf(Mat value);

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Seeds d(out)/d(out) = scale and propagates to all earlier nodes.
  void Backward(Var out, double scale = 1.0);

  // Used by the op implementations.
  using BackwardFn = std::function<void(Tape&, int self)>;
  Var Push(Mat value, BackwardFn backward);
  Mat& mutable_grad(int id) { return nodes_[id].grad; }
  const Mat& value(int id) const { return nodes_[id].value; }
  const Mat& grad(int id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// a (m x k) times b (k x n).
Var MatMul(Tape& t, Var a, Var b);
Var Add(Tape& t, Var a, Var b);
Var Sub(Tape& t, Var a, Var b);
// Adds a column vector to every column of a.
Var AddBias(Tape& t, Var a, Var bias);
Var Mul(Tape& t, Var a, Var b);  // elementwise
Var Scale(Tape& t, Var a, double s);
Var AddScalar(Tape& t, Var a, double s);
Var Tanh(Tape& t, Var a);
Var Sigmoid(Tape& t, Var a);
Var Exp(Tape& t, Var a);
Var Min(Tape& t, Var a, Var b);  // elementwise; ties route to a
Var Clamp(Tape& t, Var a, double lo, double hi);
Var Square(Tape& t, Var a);
Var Sum(Tape& t, Var a);          // 1x1
Var ColSum(Tape& t, Var a);       // 1 x cols
Var Mean(Tape& t, Var a);         // 1x1
Var Rows(Tape& t, Var a, int begin, int count);
Var VStack(Tape& t, Var a, Var b);
// Concatenates column blocks with equal row counts.
Var HStack(Tape& t, const std::vector<Var>& parts);

}  // namespace kinres::nn

#endif  // KINRES_NN_TAPE_H_
