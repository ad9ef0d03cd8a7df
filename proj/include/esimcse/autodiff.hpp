// Copyright 2026 The esimcse Authors.
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

#pragma once

// Reverse-mode differentiation over a fixed set of dense operations.
//
// A Tape records every operation applied to its variables. Each recorded node
// owns its forward value and, when any input needs a gradient, a closure that
// pushes the node's output gradient back into its inputs. Nodes are appended
// in evaluation order, so a single reverse sweep is a valid topological order.

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "esimcse/rng.hpp"
#include "esimcse/tensor.hpp"

namespace esimcse {

template <typename S>
class Tape;

template <typename S>
class Var {
 public:
  Var() = default;
  Var(Tape<S>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix<S>& value() const { return tape_->value(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

  Tape<S>* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<S>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename S>
class Tape {
 public:
  // Receives the tape and the gradient flowing into the node's output.
  using Backward = std::function<void(Tape&, const Matrix<S>&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<S> constant(Matrix<S> value) { return push(std::move(value), false, nullptr); }

  // Leaf whose gradient is collected by backward().
  Var<S> parameter(Matrix<S> value) { return push(std::move(value), true, nullptr); }

  // Records an operation. The closure is dropped when no input needs a gradient.
  Var<S> record(Matrix<S> value, std::initializer_list<Var<S>> inputs, Backward backward) {
    return record(std::move(value), std::span<const Var<S>>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  Var<S> record(Matrix<S> value, std::span<const Var<S>> inputs, Backward backward) {
    bool needs = false;
    for (const auto& in : inputs) {
      check_owned(in);
      needs = needs || nodes_[in.id()].requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  const Matrix<S>& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(Var<S> v) const {
    check_owned(v);
    return nodes_[v.id()].requires_grad;
  }

  // Adds `delta` into the gradient of `v` if it takes part in differentiation.
  template <typename Derived>
  void accumulate(Var<S> v, const Eigen::MatrixBase<Derived>& delta) {
    Node& node = nodes_[v.id()];
    if (!node.requires_grad) return;
    if (!node.has_grad) {
      node.grad = delta;
      node.has_grad = true;
    } else {
      node.grad += delta;
    }
  }

  // Adds `delta` into the block of `v`'s gradient starting at (row, col).
  template <typename Derived>
  void accumulate_block(Var<S> v, Eigen::Index row, Eigen::Index col, const Eigen::MatrixBase<Derived>& delta) {
    Node& node = nodes_[v.id()];
    if (!node.requires_grad) return;
    if (!node.has_grad) {
      node.grad = Matrix<S>::Zero(node.value.rows(), node.value.cols());
      node.has_grad = true;
    }
    node.grad.block(row, col, delta.rows(), delta.cols()) += delta;
  }

  // Propagates d(loss)/d(node) to every node that requires a gradient.
  void backward(Var<S> loss) {
    check_owned(loss);
    if (loss.rows() != 1 || loss.cols() != 1) {
      throw std::invalid_argument("backward: loss must be a 1x1 scalar");
    }
    for (auto& node : nodes_) {
      node.has_grad = false;
      node.grad.resize(0, 0);
    }
    accumulate(loss, Matrix<S>::Ones(1, 1));
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.has_grad || !node.backward) continue;
      // Consumers of node i all come later on the tape, so its gradient is
      // complete here; the closure only appends to earlier nodes.
      Matrix<S> grad = std::move(node.grad);
      node.backward(*this, grad);
      nodes_[i].grad = std::move(grad);
    }
  }

  // Gradient after backward(); zeros when the loss does not depend on `v`.
  Matrix<S> gradient(Var<S> v) const {
    check_owned(v);
    const Node& node = nodes_[v.id()];
    if (node.has_grad) return node.grad;
    return Matrix<S>::Zero(node.value.rows(), node.value.cols());
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<S> value;
    Matrix<S> grad;
    bool requires_grad = false;
    bool has_grad = false;
    Backward backward;
  };

  Var<S> push(Matrix<S> value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Matrix<S>(), requires_grad, false, std::move(backward)});
    return Var<S>(this, nodes_.size() - 1);
  }

  void check_owned(Var<S> v) const {
    if (v.tape() != this || v.id() >= nodes_.size()) {
      throw std::invalid_argument("variable was not recorded on this tape");
    }
  }

  std::vector<Node> nodes_;
};

namespace detail {

template <typename S>
Tape<S>& same_tape(Var<S> a, Var<S> b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("operands recorded on different tapes");
  return *a.tape();
}

inline void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  auto& tape = detail::same_tape(a, b);
  detail::require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix<S> out = a.value() * b.value();
  return tape.record(std::move(out), {a, b}, [a, b](Tape<S>& t, const Matrix<S>& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

// a * b^T
template <typename S>
Var<S> matmul_nt(Var<S> a, Var<S> b) {
  auto& tape = detail::same_tape(a, b);
  detail::require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Matrix<S> out = a.value() * b.value().transpose();
  return tape.record(std::move(out), {a, b}, [a, b](Tape<S>& t, const Matrix<S>& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value());
    if (t.requires_grad(b)) t.accumulate(b, g.transpose() * a.value());
  });
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  auto& tape = detail::same_tape(a, b);
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shapes differ");
  Matrix<S> out = a.value() + b.value();
  return tape.record(std::move(out), {a, b}, [a, b](Tape<S>& t, const Matrix<S>& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

// Adds a 1 x n row to every row of `a`.
template <typename S>
Var<S> add_row(Var<S> a, Var<S> row) {
  auto& tape = detail::same_tape(a, row);
  detail::require(row.rows() == 1 && row.cols() == a.cols(), "add_row: bias shape mismatch");
  Matrix<S> out = a.value().rowwise() + row.value().row(0);
  return tape.record(std::move(out), {a, row}, [a, row](Tape<S>& t, const Matrix<S>& g) {
    t.accumulate(a, g);
    if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

template <typename S>
Var<S> scale(Var<S> a, S factor) {
  Matrix<S> out = a.value() * factor;
  return a.tape()->record(std::move(out), {a}, [a, factor](Tape<S>& t, const Matrix<S>& g) {
    t.accumulate(a, g * factor);
  });
}

template <typename S>
Var<S> operator+(Var<S> a, Var<S> b) {
  return add(a, b);
}

template <typename S>
Var<S> operator*(S factor, Var<S> a) {
  return scale(a, factor);
}

// ---------------------------------------------------------------------------
// Elementwise nonlinearities

template <typename S>
Var<S> tanh(Var<S> a) {
  Matrix<S> out = a.value().array().tanh().matrix();
  Matrix<S> y = out;
  return a.tape()->record(std::move(out), {a}, [a, y](Tape<S>& t, const Matrix<S>& g) {
    t.accumulate(a, (g.array() * (S(1) - y.array().square())).matrix());
  });
}

// GELU, tanh approximation.
template <typename S>
Var<S> gelu(Var<S> a) {
  const S c = S(0.7978845608028654);  // sqrt(2/pi)
  const S k = S(0.044715);
  const auto& x = a.value().array();
  Matrix<S> inner_tanh = (c * (x + k * x.cube())).tanh().matrix();
  Matrix<S> out = (S(0.5) * x * (S(1) + inner_tanh.array())).matrix();
  return a.tape()->record(std::move(out), {a}, [a, inner_tanh, c, k](Tape<S>& t, const Matrix<S>& g) {
    const auto& x = a.value().array();
    const auto& th = inner_tanh.array();
    auto dydx = S(0.5) * (S(1) + th) +
                S(0.5) * x * (S(1) - th.square()) * c * (S(1) + S(3) * k * x.square());
    t.accumulate(a, (g.array() * dydx).matrix());
  });
}

// ---------------------------------------------------------------------------
// Softmax family

// Row softmax over the first `valid_cols` columns; remaining columns get
// probability zero (padding keys). Max-subtracted.
template <typename S>
Var<S> masked_softmax_rows(Var<S> a, Eigen::Index valid_cols) {
  detail::require(valid_cols >= 1 && valid_cols <= a.cols(), "softmax: invalid key count");
  const Matrix<S>& x = a.value();
  Matrix<S> out = Matrix<S>::Zero(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    auto src = x.row(r).head(valid_cols);
    auto dst = out.row(r).head(valid_cols);
    dst = (src.array() - src.maxCoeff()).exp().matrix();
    dst /= dst.sum();
  }
  Matrix<S> y = out;
  return a.tape()->record(std::move(out), {a}, [a, y](Tape<S>& t, const Matrix<S>& g) {
    Matrix<S> dx = y.cwiseProduct(g);
    const Matrix<S> row_dot = dx.rowwise().sum();
    dx -= (y.array().colwise() * row_dot.col(0).array()).matrix();
    t.accumulate(a, dx);
  });
}

template <typename S>
Var<S> softmax_rows(Var<S> a) {
  return masked_softmax_rows(a, a.cols());
}

// Mean over rows of -log softmax(logits[r])[targets[r]], via log-sum-exp.
template <typename S>
Var<S> softmax_cross_entropy(Var<S> logits, std::span<const int> targets) {
  const Matrix<S>& x = logits.value();
  detail::require(static_cast<Eigen::Index>(targets.size()) == x.rows() && x.rows() > 0,
                  "cross entropy: one target per row required");
  Matrix<S> probs(x.rows(), x.cols());
  // Sums run in double so a 32-bit loss is not dominated by accumulation error.
  double total = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const int target = targets[static_cast<std::size_t>(r)];
    detail::require(target >= 0 && target < x.cols(), "cross entropy: target out of range");
    const auto row = x.row(r).template cast<double>().array();
    const double m = row.maxCoeff();
    const Eigen::Array<double, 1, Eigen::Dynamic> e = (row - m).exp();
    const double denom = e.sum();
    probs.row(r) = (e / denom).template cast<S>().matrix();
    total += (m + std::log(denom)) - row(target);
  }
  const auto n = static_cast<S>(x.rows());
  Matrix<S> out(1, 1);
  out(0, 0) = static_cast<S>(total / static_cast<double>(x.rows()));
  std::vector<int> tgt(targets.begin(), targets.end());
  return logits.tape()->record(
      std::move(out), {logits}, [logits, probs, tgt, n](Tape<S>& t, const Matrix<S>& g) {
        Matrix<S> dx = probs;
        for (std::size_t r = 0; r < tgt.size(); ++r) dx(static_cast<Eigen::Index>(r), tgt[r]) -= S(1);
        t.accumulate(logits, dx * (g(0, 0) / n));
      });
}

// ---------------------------------------------------------------------------
// Normalization

// Per-row layer normalization with learned 1 x n gain and bias.
template <typename S>
Var<S> layer_norm_rows(Var<S> x, Var<S> gain, Var<S> bias, S eps = S(1e-5)) {
  auto& tape = detail::same_tape(x, gain);
  detail::same_tape(x, bias);
  const Eigen::Index n = x.cols();
  detail::require(gain.rows() == 1 && gain.cols() == n && bias.rows() == 1 && bias.cols() == n,
                  "layer_norm: gain/bias shape mismatch");
  const Matrix<S>& in = x.value();
  Matrix<S> xhat(in.rows(), n);
  Matrix<S> inv_std(in.rows(), 1);
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const S mu = in.row(r).mean();
    const S var = (in.row(r).array() - mu).square().mean();
    inv_std(r, 0) = S(1) / std::sqrt(var + eps);
    xhat.row(r) = (in.row(r).array() - mu) * inv_std(r, 0);
  }
  Matrix<S> out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  return tape.record(std::move(out), {x, gain, bias},
                     [x, gain, bias, xhat, inv_std](Tape<S>& t, const Matrix<S>& g) {
                       if (t.requires_grad(gain)) t.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
                       if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
                       if (!t.requires_grad(x)) return;
                       const Matrix<S> dxhat = (g.array().rowwise() * gain.value().row(0).array()).matrix();
                       const Matrix<S> mean_d = dxhat.rowwise().mean();
                       const Matrix<S> mean_dx = dxhat.cwiseProduct(xhat).rowwise().mean();
                       Matrix<S> dx = dxhat;
                       dx.colwise() -= mean_d.col(0);
                       dx -= (xhat.array().colwise() * mean_dx.col(0).array()).matrix();
                       dx = (dx.array().colwise() * inv_std.col(0).array()).matrix();
                       t.accumulate(x, dx);
                     });
}

// Scales each row to unit L2 norm. Rows with norm <= min_norm are rejected.
template <typename S>
Var<S> normalize_rows(Var<S> x, S min_norm = S(1e-12)) {
  const Matrix<S>& in = x.value();
  Matrix<S> norms = in.rowwise().norm();
  if ((norms.array() <= min_norm).any()) {
    throw std::domain_error("normalize_rows: near-zero vector");
  }
  Matrix<S> out = (in.array().colwise() / norms.col(0).array()).matrix();
  Matrix<S> y = out;
  return x.tape()->record(std::move(out), {x}, [x, y, norms](Tape<S>& t, const Matrix<S>& g) {
    const Matrix<S> proj = y.cwiseProduct(g).rowwise().sum();
    Matrix<S> dx = g - (y.array().colwise() * proj.col(0).array()).matrix();
    dx = (dx.array().colwise() / norms.col(0).array()).matrix();
    t.accumulate(x, dx);
  });
}

// Row-wise L2 norm, r x 1.
template <typename S>
Var<S> l2_norm_rows(Var<S> x) {
  Matrix<S> out = x.value().rowwise().norm();
  Matrix<S> norms = out;
  return x.tape()->record(std::move(out), {x}, [x, norms](Tape<S>& t, const Matrix<S>& g) {
    Matrix<S> scale_by = g.cwiseQuotient(norms);
    t.accumulate(x, (x.value().array().colwise() * scale_by.col(0).array()).matrix());
  });
}

// ---------------------------------------------------------------------------
// Indexing and reshaping

// Row gather; serves as the embedding lookup when `table` is a parameter.
template <typename S>
Var<S> gather_rows(Var<S> table, std::span<const int> ids) {
  const Matrix<S>& src = table.value();
  Matrix<S> out(static_cast<Eigen::Index>(ids.size()), src.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    detail::require(ids[i] >= 0 && ids[i] < src.rows(), "gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = src.row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return table.tape()->record(std::move(out), {table}, [table, idx](Tape<S>& t, const Matrix<S>& g) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      t.accumulate_block(table, idx[i], 0, g.row(static_cast<Eigen::Index>(i)));
    }
  });
}

template <typename S>
Var<S> slice_rows(Var<S> x, Eigen::Index start, Eigen::Index count) {
  detail::require(start >= 0 && count >= 0 && start + count <= x.rows(), "slice_rows: out of range");
  Matrix<S> out = x.value().middleRows(start, count);
  return x.tape()->record(std::move(out), {x}, [x, start](Tape<S>& t, const Matrix<S>& g) {
    t.accumulate_block(x, start, 0, g);
  });
}

template <typename S>
Var<S> slice_cols(Var<S> x, Eigen::Index start, Eigen::Index count) {
  detail::require(start >= 0 && count >= 0 && start + count <= x.cols(), "slice_cols: out of range");
  Matrix<S> out = x.value().middleCols(start, count);
  return x.tape()->record(std::move(out), {x}, [x, start](Tape<S>& t, const Matrix<S>& g) {
    t.accumulate_block(x, 0, start, g);
  });
}

template <typename S>
Var<S> concat_rows(std::span<const Var<S>> parts) {
  detail::require(!parts.empty(), "concat_rows: no inputs");
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    detail::same_tape(parts[0], p);
    detail::require(p.cols() == parts[0].cols(), "concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix<S> out(rows, parts[0].cols());
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var<S>> inputs(parts.begin(), parts.end());
  return parts[0].tape()->record(std::move(out), parts, [inputs](Tape<S>& t, const Matrix<S>& g) {
    Eigen::Index offset = 0;
    for (const auto& p : inputs) {
      if (t.requires_grad(p)) t.accumulate(p, g.middleRows(offset, p.rows()));
      offset += p.rows();
    }
  });
}

template <typename S>
Var<S> concat_cols(std::span<const Var<S>> parts) {
  detail::require(!parts.empty(), "concat_cols: no inputs");
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    detail::same_tape(parts[0], p);
    detail::require(p.rows() == parts[0].rows(), "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix<S> out(parts[0].rows(), cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var<S>> inputs(parts.begin(), parts.end());
  return parts[0].tape()->record(std::move(out), parts, [inputs](Tape<S>& t, const Matrix<S>& g) {
    Eigen::Index offset = 0;
    for (const auto& p : inputs) {
      if (t.requires_grad(p)) t.accumulate(p, g.middleCols(offset, p.cols()));
      offset += p.cols();
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions

template <typename S>
Var<S> sum(Var<S> x) {
  Matrix<S> out(1, 1);
  out(0, 0) = x.value().sum();
  return x.tape()->record(std::move(out), {x}, [x](Tape<S>& t, const Matrix<S>& g) {
    t.accumulate(x, Matrix<S>::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

template <typename S>
Var<S> mean(Var<S> x) {
  detail::require(x.value().size() > 0, "mean: empty input");
  Matrix<S> out(1, 1);
  out(0, 0) = x.value().mean();
  const auto n = static_cast<S>(x.value().size());
  return x.tape()->record(std::move(out), {x}, [x, n](Tape<S>& t, const Matrix<S>& g) {
    t.accumulate(x, Matrix<S>::Constant(x.rows(), x.cols(), g(0, 0) / n));
  });
}

// Frobenius inner product, 1 x 1.
template <typename S>
Var<S> dot(Var<S> a, Var<S> b) {
  auto& tape = detail::same_tape(a, b);
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "dot: shapes differ");
  Matrix<S> out(1, 1);
  out(0, 0) = a.value().cwiseProduct(b.value()).sum();
  return tape.record(std::move(out), {a, b}, [a, b](Tape<S>& t, const Matrix<S>& g) {
    if (t.requires_grad(a)) t.accumulate(a, b.value() * g(0, 0));
    if (t.requires_grad(b)) t.accumulate(b, a.value() * g(0, 0));
  });
}

// ---------------------------------------------------------------------------
// Dropout

// Inverted dropout: kept entries are scaled by 1/(1-p). p = 0 records nothing
// and draws nothing from `rng`.
template <typename S>
Var<S> dropout(Var<S> x, double p, Rng& rng) {
  detail::require(p >= 0.0 && p < 1.0, "dropout: rate must be in [0, 1)");
  if (p == 0.0) return x;
  const S keep_scale = static_cast<S>(1.0 / (1.0 - p));
  Matrix<S> mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.uniform() < p ? S(0) : keep_scale;
  }
  Matrix<S> out = x.value().cwiseProduct(mask);
  return x.tape()->record(std::move(out), {x}, [x, mask](Tape<S>& t, const Matrix<S>& g) {
    t.accumulate(x, g.cwiseProduct(mask));
  });
}

}  // namespace esimcse
