/* Copyright 2026 The GRANDE Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Tape owns every intermediate value of one computation. Operations append
// a record holding the forward value and a closure that pushes the record's
// gradient into its operands. backward() walks the records in exact reverse
// order of creation. Records that never receive a gradient are skipped, so
// gradients that are structurally zero stay exactly zero.

#ifndef GRANDE_AUTODIFF_H_
#define GRANDE_AUTODIFF_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "grande/tensor.h"

namespace grande {

struct Parameter;
class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is kept on the tape.
  Var variable(Tensor value);
  /// Leaf bound to a model parameter; one record per parameter per tape.
  Var param(Parameter& p);

  /// Seeds d(root)/d(root) = 1; root must be 1 x 1.
  void backward(Var root);
  void backward(Var root, const Tensor& seed);
  /// Adds the gradients of every bound parameter into Parameter::grad.
  void flush_parameter_gradients();

  const Tensor& value(int id) const { return nodes_[id].value; }
  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  /// Gradient of a record; zeros when nothing flowed into it.
  Tensor grad(Var v) const;
  bool has_grad(int id) const { return !nodes_[id].grad.empty(); }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Used by operation implementations.
  Var record(Tensor value, std::span<const Var> inputs, Backward backward);
  Tensor& grad_ref(int id);
  const Tensor& grad_of(int id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_ids_;
};

// Primitive operations. Each throws grande::Error naming the primitive and the
// operand shapes on a shape mismatch.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// a[r, c] + bias[0, c]
Var add_row(Var a, Var bias);
/// a[r, c] * row[0, c]
Var mul_row(Var a, Var row);
/// a[r, c] * col[r, 0]
Var mul_col(Var a, Var col);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
/// Columns a0 b0 a1 b1 ...; a and b have equal shapes.
Var interleave_cols(Var a, Var b);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
/// out[i] = a[index[i]]; backward scatters.
Var gather_rows(Var a, std::vector<std::int32_t> index);
/// Sum of all entries, 1 x 1.
Var sum(Var a);
Var mean(Var a);
Var sum_squares(Var a);
Var exp(Var a);
Var log(Var a);
Var sin(Var a);
Var cos(Var a);
Var relu(Var a);
Var sigmoid(Var a);
/// Softmax along each row, computed with max subtraction.
Var softmax(Var a);
/// Per-row normalization to zero mean and unit variance, then gamma/beta
/// affine (both 1 x cols).
Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5);
/// out[r] = <a[r], b[r]>, shape r x 1.
Var rowwise_dot(Var a, Var b);
/// Softmax of a column of logits within groups sharing a segment id.
Var segment_softmax(Var logits, std::vector<std::int32_t> segment,
                    std::size_t num_segments);
/// out[s] = sum of rows of a whose segment id is s; empty segments are zero.
Var segment_sum(Var a, std::vector<std::int32_t> segment,
                std::size_t num_segments);
/// Mean binary cross-entropy over rows with mask[r] != 0. probs is r x 1 and
/// is clamped to [1e-12, 1 - 1e-12].
Var binary_cross_entropy(Var probs, std::vector<double> labels,
                         std::vector<double> mask);

}  // namespace grande

#endif  // GRANDE_AUTODIFF_H_
