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

#include "grande/autodiff.h"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "grande/parameters.h"

namespace grande {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap as_matrix(Tensor& t) {
  return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a,
                              const Tensor& b) {
  throw Error(std::string(op) + ": incompatible shapes " + a.shape_string() +
              " and " + b.shape_string());
}

void same_tape(const char* op, Var a, Var b) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw Error(std::string(op) + ": operands belong to different tapes");
  }
}

// Applies f elementwise; df(x, y) gives dy/dx from input x and output y.
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  const int ia = a.id();
  std::array<Var, 1> in{a};
  return a.tape().record(std::move(out), in, [ia, df](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_ref(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(x[i], y[i]);
  });
}

}  // namespace

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), false, nullptr, nullptr});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), true, nullptr, nullptr});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(Parameter& p) {
  auto it = param_ids_.find(&p);
  if (it != param_ids_.end()) return Var(this, it->second);
  nodes_.push_back(Node{p.value, Tensor(), true, nullptr, &p});
  const int id = static_cast<int>(nodes_.size() - 1);
  param_ids_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::record(Tensor value, std::span<const Var> inputs,
                 Backward backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (&v.tape() != this) throw Error("Tape::record: foreign operand");
    needs = needs || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Tensor(), needs,
                        needs ? std::move(backward) : nullptr, nullptr});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Tensor& Tape::grad_ref(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) {
    n.grad = Tensor(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.empty()) return Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.value().size() != 1) {
    throw Error("Tape::backward: root must be 1 x 1, got " +
                root.value().shape_string());
  }
  backward(root, Tensor::scalar(1.0));
}

void Tape::backward(Var root, const Tensor& seed) {
  if (!seed.same_shape(root.value())) {
    shape_error("Tape::backward", root.value(), seed);
  }
  if (!nodes_[root.id()].requires_grad) return;
  grad_ref(root.id()).add_inplace(seed);
  for (int i = root.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.empty()) n.backward(*this, i);
  }
}

void Tape::flush_parameter_gradients() {
  for (const auto& [param, id] : param_ids_) {
    const Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    Parameter* p = const_cast<Parameter*>(param);
    if (!p->grad.same_shape(p->value)) {
      p->grad = Tensor(p->value.rows(), p->value.cols());
    }
    p->grad.add_inplace(n.grad);
  }
}

Var matmul(Var a, Var b) {
  same_tape("matmul", a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.rows()) shape_error("matmul", x, y);
  Tensor out(x.rows(), y.cols());
  if (!out.empty() && x.cols() > 0) {
    as_matrix(out).noalias() = as_matrix(x) * as_matrix(y);
  }
  const int ia = a.id(), ib = b.id();
  std::array<Var, 2> in{a, b};
  return a.tape().record(std::move(out), in, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    if (t.requires_grad(ia) && !t.value(ia).empty()) {
      as_matrix(t.grad_ref(ia)).noalias() +=
          as_matrix(g) * as_matrix(t.value(ib)).transpose();
    }
    if (t.requires_grad(ib) && !t.value(ib).empty()) {
      as_matrix(t.grad_ref(ib)).noalias() +=
          as_matrix(t.value(ia)).transpose() * as_matrix(g);
    }
  });
}

namespace {

enum class Binary { kAdd, kSub, kMul };

Var elementwise(const char* name, Binary op, Var a, Var b) {
  same_tape(name, a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (!x.same_shape(y)) shape_error(name, x, y);
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    switch (op) {
      case Binary::kAdd: out[i] = x[i] + y[i]; break;
      case Binary::kSub: out[i] = x[i] - y[i]; break;
      case Binary::kMul: out[i] = x[i] * y[i]; break;
    }
  }
  const int ia = a.id(), ib = b.id();
  std::array<Var, 2> in{a, b};
  return a.tape().record(std::move(out), in, [ia, ib, op](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_ref(ia);
      const Tensor& y = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += op == Binary::kMul ? g[i] * y[i] : g[i];
      }
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_ref(ib);
      const Tensor& x = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) {
        switch (op) {
          case Binary::kAdd: gb[i] += g[i]; break;
          case Binary::kSub: gb[i] -= g[i]; break;
          case Binary::kMul: gb[i] += g[i] * x[i]; break;
        }
      }
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return elementwise("add", Binary::kAdd, a, b); }
Var sub(Var a, Var b) { return elementwise("sub", Binary::kSub, a, b); }
Var mul(Var a, Var b) { return elementwise("mul", Binary::kMul, a, b); }

Var scale(Var a, double factor) {
  return unary(
      a, [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Var add_row(Var a, Var bias) {
  same_tape("add_row", a, bias);
  const Tensor& x = a.value();
  const Tensor& b = bias.value();
  if (b.rows() != 1 || b.cols() != x.cols()) shape_error("add_row", x, b);
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) += b[c];
  }
  const int ia = a.id(), ib = bias.id();
  std::array<Var, 2> in{a, bias};
  return a.tape().record(std::move(out), in, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    if (t.requires_grad(ia)) t.grad_ref(ia).add_inplace(g);
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_ref(ib);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
      }
    }
  });
}

Var mul_row(Var a, Var row) {
  same_tape("mul_row", a, row);
  const Tensor& x = a.value();
  const Tensor& w = row.value();
  if (w.rows() != 1 || w.cols() != x.cols()) shape_error("mul_row", x, w);
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) *= w[c];
  }
  const int ia = a.id(), ib = row.id();
  std::array<Var, 2> in{a, row};
  return a.tape().record(std::move(out), in, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& x = t.value(ia);
    const Tensor& w = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_ref(ia);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += g(r, c) * w[c];
      }
    }
    if (t.requires_grad(ib)) {
      Tensor& gw = t.grad_ref(ib);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gw[c] += g(r, c) * x(r, c);
      }
    }
  });
}

Var mul_col(Var a, Var col) {
  same_tape("mul_col", a, col);
  const Tensor& x = a.value();
  const Tensor& w = col.value();
  if (w.cols() != 1 || w.rows() != x.rows()) shape_error("mul_col", x, w);
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) *= w[r];
  }
  const int ia = a.id(), ib = col.id();
  std::array<Var, 2> in{a, col};
  return a.tape().record(std::move(out), in, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& x = t.value(ia);
    const Tensor& w = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_ref(ia);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += g(r, c) * w[r];
      }
    }
    if (t.requires_grad(ib)) {
      Tensor& gw = t.grad_ref(ib);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < g.cols(); ++c) acc += g(r, c) * x(r, c);
        gw[r] += acc;
      }
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat_cols: no operands");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    same_tape("concat_cols", parts[0], p);
    if (p.rows() != rows) shape_error("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& x = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(x.data() + r * x.cols(), x.cols(),
                  out.data() + r * cols + off);
    }
    ids.push_back(p.id());
    offsets.push_back(off);
    off += x.cols();
  }
  return parts[0].tape().record(
      std::move(out), parts, [ids, offsets](Tape& t, int self) {
        const Tensor& g = t.grad_of(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          Tensor& gp = t.grad_ref(ids[k]);
          const std::size_t w = t.value(ids[k]).cols();
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < w; ++c) gp(r, c) += g(r, offsets[k] + c);
          }
        }
      });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat_rows: no operands");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    same_tape("concat_rows", parts[0], p);
    if (p.cols() != cols) shape_error("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const auto& v = p.value().values();
    data.insert(data.end(), v.begin(), v.end());
    ids.push_back(p.id());
    offsets.push_back(off);
    off += v.size();
  }
  return parts[0].tape().record(
      Tensor(rows, cols, std::move(data)), parts,
      [ids, offsets](Tape& t, int self) {
        const Tensor& g = t.grad_of(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          Tensor& gp = t.grad_ref(ids[k]);
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offsets[k] + i];
        }
      });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (begin + count > x.cols()) {
    throw Error("slice_cols: range [" + std::to_string(begin) + ", " +
                std::to_string(begin + count) + ") out of shape " +
                x.shape_string());
  }
  Tensor out(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = x(r, begin + c);
  }
  const int ia = a.id();
  std::array<Var, 1> in{a};
  return a.tape().record(std::move(out), in, [ia, begin](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor& ga = t.grad_ref(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, begin + c) += g(r, c);
    }
  });
}

Var interleave_cols(Var a, Var b) {
  same_tape("interleave_cols", a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (!x.same_shape(y)) shape_error("interleave_cols", x, y);
  Tensor out(x.rows(), 2 * x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, 2 * c) = x(r, c);
      out(r, 2 * c + 1) = y(r, c);
    }
  }
  const int ia = a.id(), ib = b.id();
  std::array<Var, 2> in{a, b};
  return a.tape().record(std::move(out), in, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    for (int k = 0; k < 2; ++k) {
      const int id = k == 0 ? ia : ib;
      if (!t.requires_grad(id)) continue;
      Tensor& gp = t.grad_ref(id);
      for (std::size_t r = 0; r < gp.rows(); ++r) {
        for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) += g(r, 2 * c + k);
      }
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (begin + count > x.rows()) {
    throw Error("slice_rows: range [" + std::to_string(begin) + ", " +
                std::to_string(begin + count) + ") out of shape " +
                x.shape_string());
  }
  std::vector<double> data(x.data() + begin * x.cols(),
                           x.data() + (begin + count) * x.cols());
  const int ia = a.id();
  const std::size_t off = begin * x.cols();
  std::array<Var, 1> in{a};
  return a.tape().record(Tensor(count, x.cols(), std::move(data)), in,
                         [ia, off](Tape& t, int self) {
                           const Tensor& g = t.grad_of(self);
                           Tensor& ga = t.grad_ref(ia);
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             ga[off + i] += g[i];
                           }
                         });
}

Var gather_rows(Var a, std::vector<std::int32_t> index) {
  const Tensor& x = a.value();
  const std::size_t cols = x.cols();
  Tensor out(index.size(), cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= x.rows()) {
      throw Error("gather_rows: index " + std::to_string(index[i]) +
                  " out of range for shape " + x.shape_string());
    }
    std::copy_n(x.data() + index[i] * cols, cols, out.data() + i * cols);
  }
  const int ia = a.id();
  std::array<Var, 1> in{a};
  return a.tape().record(
      std::move(out), in,
      [ia, index = std::move(index), cols](Tape& t, int self) {
        const Tensor& g = t.grad_of(self);
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < index.size(); ++i) {
          double* dst = ga.data() + index[i] * cols;
          const double* src = g.data() + i * cols;
          for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
        }
      });
}

Var sum(Var a) {
  const Tensor& x = a.value();
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const int ia = a.id();
  std::array<Var, 1> in{a};
  return a.tape().record(Tensor::scalar(acc), in, [ia](Tape& t, int self) {
    const double g = t.grad_of(self)[0];
    Tensor& ga = t.grad_ref(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mean(Var a) {
  if (a.value().empty()) throw Error("mean: empty operand");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var sum_squares(Var a) {
  const Tensor& x = a.value();
  double acc = 0.0;
  for (double v : x.values()) acc += v * v;
  const int ia = a.id();
  std::array<Var, 1> in{a};
  return a.tape().record(Tensor::scalar(acc), in, [ia](Tape& t, int self) {
    const double g = t.grad_of(self)[0];
    const Tensor& x = t.value(ia);
    Tensor& ga = t.grad_ref(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * g * x[i];
  });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var sin(Var a) {
  return unary(
      a, [](double x) { return std::sin(x); },
      [](double x, double) { return std::cos(x); });
}

Var cos(Var a) {
  return unary(
      a, [](double x) { return std::cos(x); },
      [](double x, double) { return -std::sin(x); });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var softmax(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row_span(r);
    auto o = out.row_span(r);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp(in[c] - mx);
      z += o[c];
    }
    for (double& v : o) v /= z;
  }
  const int ia = a.id();
  std::array<Var, 1> in{a};
  return a.tape().record(std::move(out), in, [ia](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_ref(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) {
        ga(r, c) += y(r, c) * (g(r, c) - dot);
      }
    }
  });
}

Var layer_norm(Var a, Var gamma, Var beta, double eps) {
  same_tape("layer_norm", a, gamma);
  same_tape("layer_norm", a, beta);
  const Tensor& x = a.value();
  const std::size_t n = x.cols();
  if (gamma.value().rows() != 1 || gamma.value().cols() != n) {
    shape_error("layer_norm", x, gamma.value());
  }
  if (!beta.value().same_shape(gamma.value())) {
    shape_error("layer_norm", x, beta.value());
  }
  if (n == 0) throw Error("layer_norm: zero-width rows");
  const Tensor& gm = gamma.value();
  const Tensor& bt = beta.value();
  Tensor normalized(x.rows(), n);
  std::vector<double> inv_std(x.rows());
  Tensor out(x.rows(), n);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += x(r, c);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (x(r, c) - mu) * (x(r, c) - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      normalized(r, c) = (x(r, c) - mu) * inv_std[r];
      out(r, c) = normalized(r, c) * gm[c] + bt[c];
    }
  }
  const int ia = a.id(), ig = gamma.id(), ib = beta.id();
  std::array<Var, 3> in{a, gamma, beta};
  return a.tape().record(
      std::move(out), in,
      [ia, ig, ib, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](Tape& t, int self) {
        const Tensor& g = t.grad_of(self);
        const Tensor& gm = t.value(ig);
        const std::size_t n = g.cols();
        if (t.requires_grad(ig)) {
          Tensor& gg = t.grad_ref(ig);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < n; ++c) gg[c] += g(r, c) * normalized(r, c);
          }
        }
        if (t.requires_grad(ib)) {
          Tensor& gb = t.grad_ref(ib);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < n; ++c) gb[c] += g(r, c);
          }
        }
        if (t.requires_grad(ia)) {
          Tensor& ga = t.grad_ref(ia);
          std::vector<double> dxhat(n);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
              dxhat[c] = g(r, c) * gm[c];
              mean_d += dxhat[c];
              mean_dx += dxhat[c] * normalized(r, c);
            }
            mean_d /= static_cast<double>(n);
            mean_dx /= static_cast<double>(n);
            for (std::size_t c = 0; c < n; ++c) {
              ga(r, c) += inv_std[r] *
                          (dxhat[c] - mean_d - normalized(r, c) * mean_dx);
            }
          }
        }
      });
}

Var rowwise_dot(Var a, Var b) {
  same_tape("rowwise_dot", a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (!x.same_shape(y)) shape_error("rowwise_dot", x, y);
  Tensor out(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) acc += x(r, c) * y(r, c);
    out[r] = acc;
  }
  const int ia = a.id(), ib = b.id();
  std::array<Var, 2> in{a, b};
  return a.tape().record(std::move(out), in, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_ref(ia);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) ga(r, c) += g[r] * y(r, c);
      }
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_ref(ib);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) gb(r, c) += g[r] * x(r, c);
      }
    }
  });
}

namespace {

void check_segments(const char* op, const Tensor& x,
                    const std::vector<std::int32_t>& segment,
                    std::size_t num_segments) {
  if (segment.size() != x.rows()) {
    throw Error(std::string(op) + ": " + std::to_string(segment.size()) +
                " segment ids for shape " + x.shape_string());
  }
  for (std::int32_t s : segment) {
    if (s < 0 || static_cast<std::size_t>(s) >= num_segments) {
      throw Error(std::string(op) + ": segment id " + std::to_string(s) +
                  " out of range " + std::to_string(num_segments));
    }
  }
}

}  // namespace

Var segment_softmax(Var logits, std::vector<std::int32_t> segment,
                    std::size_t num_segments) {
  const Tensor& x = logits.value();
  if (x.cols() != 1 && x.rows() > 0) {
    throw Error("segment_softmax: logits must be a column, got " +
                x.shape_string());
  }
  check_segments("segment_softmax", x, segment, num_segments);
  std::vector<double> mx(num_segments,
                         -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < segment.size(); ++i) {
    mx[segment[i]] = std::max(mx[segment[i]], x[i]);
  }
  std::vector<double> z(num_segments, 0.0);
  Tensor out(x.rows(), 1);
  for (std::size_t i = 0; i < segment.size(); ++i) {
    out[i] = std::exp(x[i] - mx[segment[i]]);
    z[segment[i]] += out[i];
  }
  for (std::size_t i = 0; i < segment.size(); ++i) out[i] /= z[segment[i]];
  const int ia = logits.id();
  std::array<Var, 1> in{logits};
  return logits.tape().record(
      std::move(out), in,
      [ia, segment = std::move(segment), num_segments](Tape& t, int self) {
        const Tensor& g = t.grad_of(self);
        const Tensor& y = t.value(self);
        std::vector<double> dot(num_segments, 0.0);
        for (std::size_t i = 0; i < segment.size(); ++i) {
          dot[segment[i]] += g[i] * y[i];
        }
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < segment.size(); ++i) {
          ga[i] += y[i] * (g[i] - dot[segment[i]]);
        }
      });
}

Var segment_sum(Var a, std::vector<std::int32_t> segment,
                std::size_t num_segments) {
  const Tensor& x = a.value();
  check_segments("segment_sum", x, segment, num_segments);
  const std::size_t cols = x.cols();
  Tensor out(num_segments, cols);
  for (std::size_t i = 0; i < segment.size(); ++i) {
    double* dst = out.data() + segment[i] * cols;
    const double* src = x.data() + i * cols;
    for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
  }
  const int ia = a.id();
  std::array<Var, 1> in{a};
  return a.tape().record(
      std::move(out), in,
      [ia, segment = std::move(segment), cols](Tape& t, int self) {
        const Tensor& g = t.grad_of(self);
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < segment.size(); ++i) {
          const double* src = g.data() + segment[i] * cols;
          double* dst = ga.data() + i * cols;
          for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
        }
      });
}

Var binary_cross_entropy(Var probs, std::vector<double> labels,
                         std::vector<double> mask) {
  constexpr double kLo = 1e-12;
  constexpr double kHi = 1.0 - 1e-12;
  const Tensor& p = probs.value();
  if (p.cols() != 1 || labels.size() != p.rows() || mask.size() != p.rows()) {
    throw Error("binary_cross_entropy: probs " + p.shape_string() + " with " +
                std::to_string(labels.size()) + " labels and " +
                std::to_string(mask.size()) + " mask entries");
  }
  double count = 0.0;
  for (double m : mask) count += m != 0.0 ? 1.0 : 0.0;
  if (count == 0.0) {
    throw Error("binary_cross_entropy: batch has no labeled targets");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double q = std::clamp(p[i], kLo, kHi);
    acc -= labels[i] * std::log(q) + (1.0 - labels[i]) * std::log(1.0 - q);
  }
  const int ia = probs.id();
  std::array<Var, 1> in{probs};
  return probs.tape().record(
      Tensor::scalar(acc / count), in,
      [ia, labels = std::move(labels), mask = std::move(mask), count](
          Tape& t, int self) {
        const double g = t.grad_of(self)[0];
        const Tensor& p = t.value(ia);
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < labels.size(); ++i) {
          if (mask[i] == 0.0 || p[i] < kLo || p[i] > kHi) continue;
          ga[i] -= g * (labels[i] / p[i] - (1.0 - labels[i]) / (1.0 - p[i])) /
                   count;
        }
      });
}

}  // namespace grande
