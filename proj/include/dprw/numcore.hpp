// Copyright 2026 The dprw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dprw/error.hpp"

namespace dprw {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

/// Dense row-major array of doubles. All library operations use rank 2
/// (a scalar is 1x1, a vector is 1xN).
class NDArray {
 public:
  NDArray() = default;

  explicit NDArray(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    data_.assign(count(shape_), fill);
  }

  NDArray(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (count(shape_) != data_.size())
      throw ShapeError("shape " + shape_str(shape_) + " does not match " +
                       std::to_string(data_.size()) + " values");
  }

  static NDArray matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return NDArray({rows, cols}, fill);
  }
  static NDArray row(std::vector<double> values) {
    const std::size_t n = values.size();
    return NDArray({1, n}, std::move(values));
  }
  static NDArray scalar(double v) { return NDArray({1, 1}, std::vector<double>{v}); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<const double> row_span(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }

  double item() const {
    if (data_.size() != 1) throw ShapeError("item() on non-scalar " + shape_str(shape_));
    return data_[0];
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const NDArray&, const NDArray&) = default;

 private:
  static std::size_t count(const Shape& s) {
    if (s.empty()) return 0;
    std::size_t n = 1;
    for (std::size_t d : s) {
      if (d == 0) throw ShapeError("zero-sized dimension in " + shape_str(s));
      n *= d;
    }
    return n;
  }

  Shape shape_;
  std::vector<double> data_;
};

struct Parameter {
  std::string name;
  NDArray value;
  NDArray grad;

  void zero_grad() { grad = NDArray(value.shape(), 0.0); }
  friend bool operator==(const Parameter& a, const Parameter& b) {
    return a.name == b.name && a.value == b.value;
  }
};

struct Var {
  std::size_t id = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, which is a
/// topological order, so backward() is a single reverse sweep.
///
/// Parameters registered with parameter() are referenced, not copied, and
/// must outlive the tape. Gradients are added into Parameter::grad.
class Tape {
 public:
  Var constant(NDArray value) {
    check_finite(value, "constant");
    Node n;
    n.own = std::move(value);
    return push(std::move(n));
  }

  // Read-only reference to an array that outlives the tape; no gradient.
  Var input(const NDArray& value) {
    Node n;
    n.external = &value;
    return push(std::move(n));
  }

  Var parameter(Parameter& p) {
    Node n;
    n.external = &p.value;
    n.requires_grad = true;
    n.param = &p;
    return push(std::move(n));
  }

  const NDArray& value(Var v) const { return node_value(v.id); }

  // Gradient of the last backward() target w.r.t. v (empty if v does not
  // influence it).
  const NDArray& grad(Var v) const { return nodes_.at(v.id).grad; }

  std::size_t size() const { return nodes_.size(); }

  void reset() {
    nodes_.clear();
    backward_done_ = false;
  }

  Var matmul(Var a, Var b) {
    const NDArray& A = value(a);
    const NDArray& B = value(b);
    if (A.cols() != B.rows())
      throw ShapeError("matmul " + shape_str(A.shape()) + " x " + shape_str(B.shape()));
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    NDArray C = NDArray::matrix(m, n);
    gemm_nn(A.data(), B.data(), C.data(), m, k, n);
    return push_op(std::move(C), "matmul", {a, b}, [a, b, m, k, n](Tape& t, const NDArray& g) {
      if (t.wants(a)) gemm_nt(g.data(), t.value(b).data(), t.grad_buffer(a).data(), m, n, k);
      if (t.wants(b)) gemm_tn(t.value(a).data(), g.data(), t.grad_buffer(b).data(), m, k, n);
    });
  }

  // Same shape, or b a 1xN row broadcast over the rows of a.
  Var add(Var a, Var b) {
    const NDArray& A = value(a);
    const NDArray& B = value(b);
    const bool broadcast = B.rows() == 1 && A.rows() != 1 && B.cols() == A.cols();
    if (!broadcast && A.shape() != B.shape())
      throw ShapeError("add " + shape_str(A.shape()) + " + " + shape_str(B.shape()));
    NDArray C = A;
    const std::size_t cols = A.cols();
    for (std::size_t i = 0; i < C.size(); ++i) C[i] += broadcast ? B[i % cols] : B[i];
    return push_op(std::move(C), "add", {a, b}, [a, b, broadcast, cols](Tape& t, const NDArray& g) {
      if (t.wants(a)) axpy(g, t.grad_buffer(a));
      if (t.wants(b)) {
        NDArray& gb = t.grad_buffer(b);
        if (broadcast) {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i % cols] += g[i];
        } else {
          axpy(g, gb);
        }
      }
    });
  }

  Var sub(Var a, Var b) {
    const NDArray& A = value(a);
    const NDArray& B = value(b);
    if (A.shape() != B.shape())
      throw ShapeError("sub " + shape_str(A.shape()) + " - " + shape_str(B.shape()));
    NDArray C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C[i] -= B[i];
    return push_op(std::move(C), "sub", {a, b}, [a, b](Tape& t, const NDArray& g) {
      if (t.wants(a)) axpy(g, t.grad_buffer(a));
      if (t.wants(b)) axpy(g, t.grad_buffer(b), -1.0);
    });
  }

  Var mul(Var a, Var b) {
    const NDArray& A = value(a);
    const NDArray& B = value(b);
    if (A.shape() != B.shape())
      throw ShapeError("mul " + shape_str(A.shape()) + " * " + shape_str(B.shape()));
    NDArray C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
    return push_op(std::move(C), "mul", {a, b}, [a, b](Tape& t, const NDArray& g) {
      if (t.wants(a)) {
        NDArray& ga = t.grad_buffer(a);
        const NDArray& B = t.value(b);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
      }
      if (t.wants(b)) {
        NDArray& gb = t.grad_buffer(b);
        const NDArray& A = t.value(a);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
      }
    });
  }

  Var scale(Var a, double s) {
    NDArray C = value(a);
    for (double& v : C.storage()) v *= s;
    return push_op(std::move(C), "scale", {a}, [a, s](Tape& t, const NDArray& g) {
      if (t.wants(a)) axpy(g, t.grad_buffer(a), s);
    });
  }

  // 1 - a
  Var one_minus(Var a) {
    NDArray C = value(a);
    for (double& v : C.storage()) v = 1.0 - v;
    return push_op(std::move(C), "one_minus", {a}, [a](Tape& t, const NDArray& g) {
      if (t.wants(a)) axpy(g, t.grad_buffer(a), -1.0);
    });
  }

  Var sigmoid(Var a) {
    NDArray Y = value(a);
    for (double& v : Y.storage()) v = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    return push_op(std::move(Y), "sigmoid", {a}, [a, self = nodes_.size()](Tape& t, const NDArray& g) {
      if (!t.wants(a)) return;
      const NDArray& y = t.node_value(self);
      NDArray& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    });
  }

  Var tanh(Var a) {
    NDArray Y = value(a);
    for (double& v : Y.storage()) v = std::tanh(v);
    return push_op(std::move(Y), "tanh", {a}, [a, self = nodes_.size()](Tape& t, const NDArray& g) {
      if (!t.wants(a)) return;
      const NDArray& y = t.node_value(self);
      NDArray& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
  }

  // axis 0 stacks rows, axis 1 joins columns.
  Var concat(const std::vector<Var>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat of nothing");
    if (axis != 0 && axis != 1) throw ShapeError("concat axis must be 0 or 1");
    std::size_t rows = 0, cols = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const NDArray& X = value(parts[p]);
      if (axis == 0) {
        if (p && X.cols() != cols) throw ShapeError("concat rows: column mismatch");
        cols = X.cols();
        rows += X.rows();
      } else {
        if (p && X.rows() != rows) throw ShapeError("concat cols: row mismatch");
        rows = X.rows();
        cols += X.cols();
      }
    }
    NDArray C = NDArray::matrix(rows, cols);
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (Var v : parts) {
      const NDArray& X = value(v);
      offsets.push_back(off);
      for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c) {
          if (axis == 0) C(off + r, c) = X(r, c);
          else C(r, off + c) = X(r, c);
        }
      off += axis == 0 ? X.rows() : X.cols();
    }
    return push_op(std::move(C), "concat", parts, [parts, offsets, axis](Tape& t, const NDArray& g) {
      for (std::size_t p = 0; p < parts.size(); ++p) {
        if (!t.wants(parts[p])) continue;
        NDArray& gx = t.grad_buffer(parts[p]);
        for (std::size_t r = 0; r < gx.rows(); ++r)
          for (std::size_t c = 0; c < gx.cols(); ++c)
            gx(r, c) += axis == 0 ? g(offsets[p] + r, c) : g(r, offsets[p] + c);
      }
    });
  }

  // Embedding lookup: row i of the result is row ids[i] of table.
  template <typename Id>
  Var row_select(Var table, std::span<const Id> ids) {
    const NDArray& T = value(table);
    if (ids.empty()) throw ShapeError("row_select with no ids");
    const std::size_t cols = T.cols();
    NDArray C = NDArray::matrix(ids.size(), cols);
    std::vector<std::size_t> rows(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      rows[i] = static_cast<std::size_t>(ids[i]);
      if (rows[i] >= T.rows())
        throw ShapeError("row_select id " + std::to_string(rows[i]) + " >= " + std::to_string(T.rows()));
      std::copy_n(T.data() + rows[i] * cols, cols, C.data() + i * cols);
    }
    return push_op(std::move(C), "row_select", {table}, [table, rows = std::move(rows), cols](Tape& t, const NDArray& g) {
      if (!t.wants(table)) return;
      NDArray& gt = t.grad_buffer(table);
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < cols; ++c) gt[rows[i] * cols + c] += g[i * cols + c];
    });
  }
  template <typename Id>
  Var row_select(Var table, const std::vector<Id>& ids) {
    return row_select(table, std::span<const Id>(ids));
  }

  // Rescales each row r to r * min(1, c / ||r||_1).
  Var l1_clip_rows(Var a, double c) {
    if (!(c > 0)) throw ConfigError("clip constant must be positive");
    NDArray Y = value(a);
    const std::size_t cols = Y.cols();
    std::vector<double> norms(Y.rows());
    for (std::size_t r = 0; r < Y.rows(); ++r) {
      double n = 0;
      for (std::size_t j = 0; j < cols; ++j) n += std::abs(Y(r, j));
      norms[r] = n;
      if (n > c) {
        const double s = c / n;
        for (std::size_t j = 0; j < cols; ++j) Y(r, j) *= s;
      }
    }
    return push_op(std::move(Y), "l1_clip_rows", {a}, [a, c, cols, norms = std::move(norms)](Tape& t, const NDArray& g) {
      if (!t.wants(a)) return;
      const NDArray& X = t.value(a);
      NDArray& ga = t.grad_buffer(a);
      for (std::size_t r = 0; r < norms.size(); ++r) {
        const double n = norms[r];
        if (n <= c) {
          for (std::size_t j = 0; j < cols; ++j) ga(r, j) += g(r, j);
          continue;
        }
        double gx = 0;
        for (std::size_t j = 0; j < cols; ++j) gx += g(r, j) * X(r, j);
        for (std::size_t j = 0; j < cols; ++j) {
          const double x = X(r, j);
          const double sgn = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
          ga(r, j) += (c / n) * g(r, j) - (c / (n * n)) * sgn * gx;
        }
      }
    });
  }

  Var sum(Var a) {
    const NDArray& A = value(a);
    const double s = std::accumulate(A.storage().begin(), A.storage().end(), 0.0);
    return push_op(NDArray::scalar(s), "sum", {a}, [a](Tape& t, const NDArray& g) {
      if (!t.wants(a)) return;
      NDArray& ga = t.grad_buffer(a);
      for (double& v : ga.storage()) v += g[0];
    });
  }

  /// Mean softmax cross-entropy over rows whose target != ignore_id.
  /// Returns a 1x1 node; 0 when every row is ignored.
  template <typename Id>
  Var softmax_cross_entropy(Var logits, std::span<const Id> targets, long long ignore_id) {
    const NDArray& L = value(logits);
    if (targets.size() != L.rows())
      throw ShapeError("cross-entropy: " + std::to_string(targets.size()) + " targets for " +
                       std::to_string(L.rows()) + " rows");
    const std::size_t V = L.cols();
    NDArray probs = NDArray::matrix(L.rows(), V);
    std::vector<long long> tgt(targets.size());
    double total = 0;
    std::size_t counted = 0;
    for (std::size_t r = 0; r < L.rows(); ++r) {
      tgt[r] = static_cast<long long>(targets[r]);
      const double* row = L.data() + r * V;
      const double mx = *std::max_element(row, row + V);
      double z = 0;
      for (std::size_t j = 0; j < V; ++j) z += std::exp(row[j] - mx);
      for (std::size_t j = 0; j < V; ++j) probs(r, j) = std::exp(row[j] - mx) / z;
      if (tgt[r] == ignore_id) continue;
      if (tgt[r] < 0 || static_cast<std::size_t>(tgt[r]) >= V)
        throw ShapeError("cross-entropy target " + std::to_string(tgt[r]) + " out of range");
      total += mx + std::log(z) - row[tgt[r]];
      ++counted;
    }
    const double loss = counted ? total / static_cast<double>(counted) : 0.0;
    return push_op(NDArray::scalar(loss), "softmax_cross_entropy", {logits},
                   [logits, probs = std::move(probs), tgt = std::move(tgt), ignore_id, counted, V](Tape& t, const NDArray& g) {
                     if (!t.wants(logits) || counted == 0) return;
                     NDArray& gl = t.grad_buffer(logits);
                     const double w = g[0] / static_cast<double>(counted);
                     for (std::size_t r = 0; r < tgt.size(); ++r) {
                       if (tgt[r] == ignore_id) continue;
                       for (std::size_t j = 0; j < V; ++j) {
                         const double onehot = static_cast<long long>(j) == tgt[r] ? 1.0 : 0.0;
                         gl(r, j) += w * (probs(r, j) - onehot);
                       }
                     }
                   });
  }
  template <typename Id>
  Var softmax_cross_entropy(Var logits, const std::vector<Id>& targets, long long ignore_id) {
    return softmax_cross_entropy(logits, std::span<const Id>(targets), ignore_id);
  }

  // Fills gradients for every node influencing `loss`, then adds parameter
  // gradients into their Parameter::grad.
  void backward(Var loss) {
    if (backward_done_) throw StateError("backward() called twice without reset()");
    if (value(loss).size() != 1) throw ShapeError("backward() needs a scalar loss");
    backward_done_ = true;
    grad_buffer(loss)[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty()) continue;
      if (n.backward) {
        auto fn = std::move(n.backward);
        fn(*this, n.grad);
        nodes_[i].backward = nullptr;
      }
      if (Parameter* p = nodes_[i].param) {
        if (p->grad.shape() != p->value.shape()) p->zero_grad();
        axpy(nodes_[i].grad, p->grad);
      }
    }
  }

 private:
  using BackwardFn = std::function<void(Tape&, const NDArray&)>;

  struct Node {
    NDArray own;
    const NDArray* external = nullptr;
    NDArray grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  const NDArray& node_value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.external ? *n.external : n.own;
  }

  bool wants(Var v) const { return nodes_[v.id].requires_grad; }

  NDArray& grad_buffer(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty()) n.grad = NDArray(node_value(v.id).shape(), 0.0);
    return n.grad;
  }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  Var push_op(NDArray value, const char* op, const std::vector<Var>& inputs, BackwardFn fn) {
    check_finite(value, op);
    Node n;
    n.own = std::move(value);
    n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [&](Var v) { return wants(v); });
    if (n.requires_grad) n.backward = std::move(fn);
    return push(std::move(n));
  }

  static void check_finite(const NDArray& v, const char* op) {
    if (!v.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
  }

  static void axpy(const NDArray& x, NDArray& y, double a = 1.0) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
  }

  static constexpr std::size_t kRowBlock = 4;

  // C[m,n] += A[m,k] * B[k,n]. Rows are processed in small blocks so each
  // row of B is reused from cache; per-element summation order is always
  // p = 0..k-1.
  static void gemm_nn(const double* A, const double* B, double* C, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i0 = 0; i0 < m; i0 += kRowBlock) {
      const std::size_t i1 = std::min(m, i0 + kRowBlock);
      for (std::size_t p = 0; p < k; ++p) {
        const double* b = B + p * n;
        for (std::size_t i = i0; i < i1; ++i) {
          const double a = A[i * k + p];
          double* c = C + i * n;
          for (std::size_t j = 0; j < n; ++j) c[j] += a * b[j];
        }
      }
    }
  }

  // dA[m,k] += G[m,n] * B[k,n]^T, computed as G * (B^T) with B transposed
  // up front so the inner loop is an axpy.
  static void gemm_nt(const double* G, const double* B, double* dA, std::size_t m, std::size_t n, std::size_t k) {
    std::vector<double> bt(n * k);
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = B[p * n + j];
    gemm_nn(G, bt.data(), dA, m, n, k);
  }

  // dB[k,n] += A[m,k]^T * G[m,n]
  static void gemm_tn(const double* A, const double* G, double* dB, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
      double* d = dB + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const double a = A[i * k + p];
        const double* g = G + i * n;
        for (std::size_t j = 0; j < n; ++j) d[j] += a * g[j];
      }
    }
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<NDArray> m;
  std::vector<NDArray> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(std::span<const Parameter> params) {
    AdamState s;
    for (const Parameter& p : params) {
      s.m.emplace_back(p.value.shape(), 0.0);
      s.v.emplace_back(p.value.shape(), 0.0);
    }
    return s;
  }
};

// One bias-corrected Adam update of every parameter from its grad.
inline void adam_step(std::span<Parameter> params, double lr, AdamState& state, const AdamOptions& opt = {}) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam: state holds " + std::to_string(state.m.size()) + " moments for " +
                     std::to_string(params.size()) + " parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params[i];
    if (p.grad.shape() != p.value.shape() || state.m[i].shape() != p.value.shape() ||
        state.v[i].shape() != p.value.shape())
      throw ShapeError("adam: shape mismatch for parameter '" + p.name + "'");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    double* w = p.value.data();
    const double* g = p.grad.data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      m[j] = opt.beta1 * m[j] + (1.0 - opt.beta1) * g[j];
      v[j] = opt.beta2 * v[j] + (1.0 - opt.beta2) * g[j] * g[j];
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + opt.eps);
    }
  }
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_parameter;
  bool passed = true;
};

// Builds a scalar on the tape from the registered parameter nodes.
using ScalarProgram = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Compares tape gradients with central differences on every coordinate.
/// Relative error is |a - n| / max(|a|, |n|, abs_floor); the floor keeps
/// near-zero gradients from turning rounding noise into huge ratios.
inline GradCheckReport finite_difference_check(const ScalarProgram& program, std::vector<Parameter>& params,
                                               double rtol = 1e-4, double step = 1e-5,
                                               double abs_floor = 1e-5) {
  auto evaluate = [&]() {
    Tape tape;
    std::vector<Var> vars;
    for (Parameter& p : params) vars.push_back(tape.parameter(p));
    return tape.value(program(tape, vars)).item();
  };
  for (Parameter& p : params) p.zero_grad();
  {
    Tape tape;
    std::vector<Var> vars;
    for (Parameter& p : params) vars.push_back(tape.parameter(p));
    tape.backward(program(tape, vars));
  }
  GradCheckReport report;
  for (Parameter& p : params) {
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double orig = p.value[j];
      p.value[j] = orig + step;
      const double fp = evaluate();
      p.value[j] = orig - step;
      const double fm = evaluate();
      p.value[j] = orig;
      const double numeric = (fp - fm) / (2.0 * step);
      const double analytic = p.grad[j];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.coordinates;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_parameter = p.name + "[" + std::to_string(j) + "]";
      }
    }
  }
  report.passed = report.max_rel_error < rtol;
  return report;
}

}  // namespace dprw
