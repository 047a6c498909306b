/*
 * Copyright 2026 The textpose Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace textpose {

using Shape = std::vector<std::size_t>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

class Tensor;
class Backprop;
class Gradients;
Gradients backward(const Tensor& loss);

namespace detail {

struct Node;

using BackwardFn =
    std::function<void(const Node& self, std::span<const double> grad, Backprop& bp)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
  bool requires_grad = false;
};

inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Dense row-major array of doubles with an optional link into the
/// differentiation graph. Copies share the underlying node; values are
/// immutable once created, except for leaf parameters updated through
/// assign() between evaluations.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false) {
    if (numel(shape) != values.size()) {
      throw DimensionError("tensor: shape " + to_string(shape) + " does not match " +
                           std::to_string(values.size()) + " values");
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    auto n = numel(shape);
    return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor full(Shape shape, double v) {
    auto n = numel(shape);
    return from(std::move(shape), std::vector<double>(n, v));
  }

  static Tensor scalar(double v) { return from({}, {v}); }

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<double> values;
    std::size_t cols = rows.size() ? rows.begin()->size() : 0;
    for (const auto& r : rows) {
      if (r.size() != cols) throw DimensionError("tensor: ragged matrix literal");
      values.insert(values.end(), r.begin(), r.end());
    }
    return from({rows.size(), cols}, std::move(values));
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const { return node_->shape.at(0); }
  std::size_t cols() const { return node_->shape.at(1); }
  std::span<const double> data() const { return node_->value; }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const {
    if (size() != 1) throw ContractError("item: tensor has " + std::to_string(size()) + " elements");
    return node_->value[0];
  }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return !node_->backward; }

  /// Overwrites the values of a leaf tensor (optimizer and finite-difference use).
  void assign(std::span<const double> values) const {
    if (!is_leaf()) throw ContractError("assign: only leaf tensors can be updated in place");
    if (values.size() != size()) throw DimensionError("assign: size mismatch");
    std::copy(values.begin(), values.end(), node_->value.begin());
  }
  void assign_at(std::size_t i, double v) const {
    if (!is_leaf()) throw ContractError("assign: only leaf tensors can be updated in place");
    node_->value.at(i) = v;
  }

  /// Value copy with no graph linkage.
  Tensor detach() const { return from(shape(), node_->value); }

  const detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_op(const char*, Shape, std::vector<double>, std::initializer_list<Tensor>,
                        detail::BackwardFn);

  std::shared_ptr<detail::Node> node_;
};

/// Gradient buffers during one backward sweep.
class Backprop {
 public:
  /// Gradient accumulator for a parent node; empty when the node is constant.
  std::span<double> grad(const detail::Node& node) {
    if (!node.requires_grad) return {};
    auto [it, inserted] = grads_.try_emplace(&node);
    if (inserted) it->second.assign(node.value.size(), 0.0);
    return it->second;
  }

 private:
  friend class Gradients;
  friend Gradients backward(const Tensor& loss);
  std::unordered_map<const detail::Node*, std::vector<double>> grads_;
};

/// Gradients of a scalar with respect to the leaf tensors it depends on.
class Gradients {
 public:
  /// Gradient for `t`; all zeros when `t` is not on a path to the loss.
  std::vector<double> of(const Tensor& t) const {
    auto it = leaf_.find(t.node());
    if (it == leaf_.end()) return std::vector<double>(t.size(), 0.0);
    return it->second;
  }
  bool contains(const Tensor& t) const { return leaf_.count(t.node()) != 0; }

 private:
  friend Gradients backward(const Tensor& loss);
  std::unordered_map<const detail::Node*, std::vector<double>> leaf_;
};

/// Records an operation result. `backward` runs only when some parent requires
/// gradients and recording is enabled. Throws NumericError on non-finite output.
inline Tensor make_op(const char* name, Shape shape, std::vector<double> values,
                      std::initializer_list<Tensor> parents, detail::BackwardFn backward) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string(name) + ": non-finite value produced");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  bool needs = false;
  if (detail::grad_mode()) {
    for (const auto& p : parents) needs = needs || p.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const auto& p : parents) node->parents.push_back(p.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

inline Gradients backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + to_string(loss.shape()));
  }
  Gradients out;
  if (!loss.requires_grad()) return out;

  // Iterative post-order DFS gives a topological order.
  std::vector<const detail::Node*> order;
  std::unordered_set<const detail::Node*> seen;
  std::vector<std::pair<const detail::Node*, std::size_t>> stack{{loss.node(), 0}};
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      const detail::Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  Backprop bp;
  bp.grad(*loss.node())[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const detail::Node* node = *it;
    if (!node->backward) continue;
    auto g = bp.grads_.find(node);
    if (g == bp.grads_.end()) continue;
    std::vector<double> grad = std::move(g->second);
    bp.grads_.erase(g);
    node->backward(*node, grad, bp);
  }
  for (auto& [node, grad] : bp.grads_) {
    if (!node->backward) out.leaf_.emplace(node, std::move(grad));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

namespace detail {

inline void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + to_string(t.shape()));
  }
}

template <typename F>
Tensor unary(const char* name, const Tensor& a, F&& f,
             std::function<double(double x, double y)> dydx) {
  std::vector<double> out(a.size());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_op(name, a.shape(), std::move(out), {a},
                 [dydx = std::move(dydx)](const Node& self, std::span<const double> g,
                                          Backprop& bp) {
                   const Node& x = *self.parents[0];
                   auto gx = bp.grad(x);
                   for (std::size_t i = 0; i < gx.size(); ++i) {
                     gx[i] += g[i] * dydx(x.value[i], self.value[i]);
                   }
                 });
}

enum class Bcast { same, row, col, scalar };

// How `small` maps onto `full`.
inline Bcast broadcast_kind(const Tensor& full, const Tensor& small, const char* op) {
  if (full.shape() == small.shape()) return Bcast::same;
  if (small.size() == 1) return Bcast::scalar;
  if (full.rank() == 2 && small.rank() == 2) {
    if (small.rows() == 1 && small.cols() == full.cols()) return Bcast::row;
    if (small.cols() == 1 && small.rows() == full.rows()) return Bcast::col;
  }
  throw DimensionError(std::string(op) + ": shapes " + to_string(full.shape()) + " and " +
                       to_string(small.shape()) + " are not broadcast-compatible");
}

inline bool broadcasts_onto(const Tensor& full, const Tensor& small) {
  if (full.size() < small.size()) return false;
  if (full.shape() == small.shape() || small.size() == 1) return true;
  return full.rank() == 2 && small.rank() == 2 &&
         ((small.rows() == 1 && small.cols() == full.cols()) ||
          (small.cols() == 1 && small.rows() == full.rows()));
}

inline std::size_t bcast_index(Bcast kind, std::size_t flat, std::size_t cols) {
  switch (kind) {
    case Bcast::same: return flat;
    case Bcast::row: return flat % cols;
    case Bcast::col: return flat / cols;
    case Bcast::scalar: return 0;
  }
  return 0;
}

enum class BinaryKind { add, mul };

inline Tensor binary(const char* name, const Tensor& lhs, const Tensor& rhs, BinaryKind kind) {
  const bool swap = !broadcasts_onto(lhs, rhs) && broadcasts_onto(rhs, lhs);
  const Tensor& full = swap ? rhs : lhs;
  const Tensor& small = swap ? lhs : rhs;
  const Bcast bk = broadcast_kind(full, small, name);
  const std::size_t cols = full.rank() == 2 ? full.cols() : 1;
  std::vector<double> out(full.size());
  auto f = full.data();
  auto s = small.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double b = s[bcast_index(bk, i, cols)];
    out[i] = kind == BinaryKind::add ? f[i] + b : f[i] * b;
  }
  return make_op(name, full.shape(), std::move(out), {full, small},
                 [bk, cols, kind](const Node& self, std::span<const double> g, Backprop& bp) {
                   const Node& fn = *self.parents[0];
                   const Node& sn = *self.parents[1];
                   auto gf = bp.grad(fn);
                   auto gs = bp.grad(sn);
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     std::size_t j = bcast_index(bk, i, cols);
                     if (kind == BinaryKind::add) {
                       if (!gf.empty()) gf[i] += g[i];
                       if (!gs.empty()) gs[j] += g[i];
                     } else {
                       if (!gf.empty()) gf[i] += g[i] * sn.value[j];
                       if (!gs.empty()) gs[j] += g[i] * fn.value[i];
                     }
                   }
                 });
}

}  // namespace detail

/// Matrix product a[m×k] · b[k×n].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_rank2(a, "matmul");
  detail::require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner extents differ, " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  auto A = a.data();
  auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = &out[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      const double* brow = &B[p * n];
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  return make_op("matmul", {m, n}, std::move(out), {a, b},
                 [m, k, n](const detail::Node& self, std::span<const double> g, Backprop& bp) {
                   const auto& A = self.parents[0]->value;
                   const auto& B = self.parents[1]->value;
                   auto ga = bp.grad(*self.parents[0]);
                   auto gb = bp.grad(*self.parents[1]);
                   if (!ga.empty()) {
                     for (std::size_t i = 0; i < m; ++i) {
                       for (std::size_t p = 0; p < k; ++p) {
                         double acc = 0.0;
                         for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * B[p * n + j];
                         ga[i * k + p] += acc;
                       }
                     }
                   }
                   if (!gb.empty()) {
                     for (std::size_t i = 0; i < m; ++i) {
                       for (std::size_t p = 0; p < k; ++p) {
                         const double aip = A[i * k + p];
                         for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
                       }
                     }
                   }
                 });
}

/// a[m×k] · b[n×k]ᵀ without materializing the transpose.
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  detail::require_rank2(a, "matmul_nt");
  detail::require_rank2(b, "matmul_nt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) {
    throw DimensionError("matmul_nt: inner extents differ, " + to_string(a.shape()) + " x " +
                         to_string(b.shape()) + "^T");
  }
  std::vector<double> out(m * n);
  auto A = a.data();
  auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += A[i * k + p] * B[j * k + p];
      out[i * n + j] = acc;
    }
  }
  return make_op("matmul_nt", {m, n}, std::move(out), {a, b},
                 [m, k, n](const detail::Node& self, std::span<const double> g, Backprop& bp) {
                   const auto& A = self.parents[0]->value;
                   const auto& B = self.parents[1]->value;
                   auto ga = bp.grad(*self.parents[0]);
                   auto gb = bp.grad(*self.parents[1]);
                   for (std::size_t i = 0; i < m; ++i) {
                     for (std::size_t j = 0; j < n; ++j) {
                       const double gij = g[i * n + j];
                       if (gij == 0.0) continue;
                       if (!ga.empty()) {
                         for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gij * B[j * k + p];
                       }
                       if (!gb.empty()) {
                         for (std::size_t p = 0; p < k; ++p) gb[j * k + p] += gij * A[i * k + p];
                       }
                     }
                   }
                 });
}

inline Tensor transpose(const Tensor& a) {
  detail::require_rank2(a, "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  auto in = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
  return make_op("transpose", {c, r}, std::move(out), {a},
                 [r, c](const detail::Node& self, std::span<const double> g, Backprop& bp) {
                   auto ga = bp.grad(*self.parents[0]);
                   for (std::size_t i = 0; i < r; ++i)
                     for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
                 });
}

/// Elementwise sum. Either operand may broadcast as a 1×c row, an r×1
/// column, or a single value.
inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::binary("add", a, b, detail::BinaryKind::add);
}

/// Elementwise (Hadamard) product with the same broadcasting as add().
inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  return detail::binary("hadamard", a, b, detail::BinaryKind::mul);
}

inline Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.size());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * s;
  return make_op("scale", a.shape(), std::move(out), {a},
                 [s](const detail::Node& self, std::span<const double> g, Backprop& bp) {
                   auto ga = bp.grad(*self.parents[0]);
                   for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * s;
                 });
}

/// a − b; b may broadcast onto a.
inline Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

inline double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& a) {
  return detail::unary("sigmoid", a, sigmoid_scalar,
                       [](double, double y) { return y * (1.0 - y); });
}

inline Tensor relu(const Tensor& a) {
  return detail::unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                       [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

/// |a| with subgradient 0 at the kink.
inline Tensor abs(const Tensor& a) {
  return detail::unary("abs", a, [](double x) { return std::abs(x); },
                       [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

inline Tensor square(const Tensor& a) {
  return detail::unary("square", a, [](double x) { return x * x; },
                       [](double x, double) { return 2.0 * x; });
}

/// Row-wise softmax with max subtraction.
inline Tensor softmax_rows(const Tensor& a) {
  detail::require_rank2(a, "softmax_rows");
  const std::size_t r = a.rows(), c = a.cols();
  if (c == 0) throw DimensionError("softmax_rows: zero columns");
  std::vector<double> out(r * c);
  auto in = a.data();
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = &in[i * c];
    double* y = &out[i * c];
    const double mx = *std::max_element(x, x + c);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) total += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < c; ++j) y[j] /= total;
  }
  return make_op("softmax_rows", a.shape(), std::move(out), {a},
                 [r, c](const detail::Node& self, std::span<const double> g, Backprop& bp) {
                   auto ga = bp.grad(*self.parents[0]);
                   const auto& y = self.value;
                   for (std::size_t i = 0; i < r; ++i) {
                     double dot = 0.0;
                     for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
                     for (std::size_t j = 0; j < c; ++j)
                       ga[i * c + j] += y[i * c + j] * (g[i * c + j] - dot);
                   }
                 });
}

inline Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_op("sum", {}, {total}, {a},
                 [](const detail::Node& self, std::span<const double> g, Backprop& bp) {
                   auto ga = bp.grad(*self.parents[0]);
                   for (double& v : ga) v += g[0];
                 });
}

inline Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

/// Column means of a[r×c] as a 1×c row.
inline Tensor mean_rows(const Tensor& a) {
  detail::require_rank2(a, "mean_rows");
  const std::size_t r = a.rows(), c = a.cols();
  if (r == 0) throw DimensionError("mean_rows: zero rows");
  std::vector<double> out(c, 0.0);
  auto in = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += in[i * c + j];
  for (double& v : out) v /= static_cast<double>(r);
  return make_op("mean_rows", {1, c}, std::move(out), {a},
                 [r, c](const detail::Node& self, std::span<const double> g, Backprop& bp) {
                   auto ga = bp.grad(*self.parents[0]);
                   const double inv = 1.0 / static_cast<double>(r);
                   for (std::size_t i = 0; i < r; ++i)
                     for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j] * inv;
                 });
}

inline Tensor concat_rows(const Tensor& a, const Tensor& b) {
  detail::require_rank2(a, "concat_rows");
  detail::require_rank2(b, "concat_rows");
  if (a.cols() != b.cols()) {
    throw DimensionError("concat_rows: column counts differ, " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  const std::size_t split = a.size();
  return make_op("concat_rows", {a.rows() + b.rows(), a.cols()}, std::move(out), {a, b},
                 [split](const detail::Node& self, std::span<const double> g, Backprop& bp) {
                   auto ga = bp.grad(*self.parents[0]);
                   auto gb = bp.grad(*self.parents[1]);
                   for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
                   for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[split + i];
                 });
}

inline Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  detail::require_rank2(a, "slice_rows");
  if (begin + count > a.rows()) {
    throw DimensionError("slice_rows: range exceeds " + std::to_string(a.rows()) + " rows");
  }
  const std::size_t c = a.cols();
  auto in = a.data();
  std::vector<double> out(in.begin() + begin * c, in.begin() + (begin + count) * c);
  return make_op("slice_rows", {count, c}, std::move(out), {a},
                 [begin, c](const detail::Node& self, std::span<const double> g, Backprop& bp) {
                   auto ga = bp.grad(*self.parents[0]);
                   for (std::size_t i = 0; i < g.size(); ++i) ga[begin * c + i] += g[i];
                 });
}

inline Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw DimensionError("reshape: " + to_string(a.shape()) + " to " + to_string(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_op("reshape", std::move(shape), std::move(out), {a},
                 [](const detail::Node& self, std::span<const double> g, Backprop& bp) {
                   auto ga = bp.grad(*self.parents[0]);
                   for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
                 });
}

}  // namespace textpose
