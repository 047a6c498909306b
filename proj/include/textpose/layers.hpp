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

#include <cmath>
#include <string>

#include "textpose/params.hpp"
#include "textpose/rng.hpp"
#include "textpose/tensor.hpp"

namespace textpose {

inline double fan_in_std(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

/// y = x·W + b, W: in×out, b: 1×out.
struct LinearParams {
  Tensor w, b;

  static LinearParams create(ParamStore& store, const std::string& prefix, std::size_t in,
                             std::size_t out, Rng& rng, bool zero = false) {
    LinearParams p;
    p.w = zero ? store.add_zeros(prefix + ".w", {in, out})
               : store.add_normal(prefix + ".w", {in, out}, fan_in_std(in), rng);
    p.b = store.add_zeros(prefix + ".b", {1, out});
    return p;
  }
  static LinearParams bind(const ParamStore& store, const std::string& prefix) {
    return {store.at(prefix + ".w"), store.at(prefix + ".b")};
  }
};

inline Tensor linear(const Tensor& x, const LinearParams& p) { return add(matmul(x, p.w), p.b); }

/// Two-layer perceptron with a ReLU hidden layer.
struct MlpParams {
  LinearParams hidden, out;

  /// `zero_output` zero-initializes the last layer so the block starts as 0.
  static MlpParams create(ParamStore& store, const std::string& prefix, std::size_t dim,
                          std::size_t hidden_dim, Rng& rng, bool zero_output = false) {
    MlpParams p;
    p.hidden = LinearParams::create(store, prefix + ".fc1", dim, hidden_dim, rng);
    p.out = LinearParams::create(store, prefix + ".fc2", hidden_dim, dim, rng, zero_output);
    return p;
  }
  static MlpParams bind(const ParamStore& store, const std::string& prefix) {
    return {LinearParams::bind(store, prefix + ".fc1"), LinearParams::bind(store, prefix + ".fc2")};
  }
};

inline Tensor mlp(const Tensor& x, const MlpParams& p) { return linear(relu(linear(x, p.hidden)), p.out); }

/// Single-head attention projections, all C×C, no biases.
struct AttentionParams {
  Tensor wq, wk, wv, wo;

  static AttentionParams create(ParamStore& store, const std::string& prefix, std::size_t dim,
                                Rng& rng) {
    const double s = fan_in_std(dim);
    AttentionParams p;
    p.wq = store.add_normal(prefix + ".wq", {dim, dim}, s, rng);
    p.wk = store.add_normal(prefix + ".wk", {dim, dim}, s, rng);
    p.wv = store.add_normal(prefix + ".wv", {dim, dim}, s, rng);
    p.wo = store.add_normal(prefix + ".wo", {dim, dim}, s, rng);
    return p;
  }
  static AttentionParams bind(const ParamStore& store, const std::string& prefix) {
    return {store.at(prefix + ".wq"), store.at(prefix + ".wk"), store.at(prefix + ".wv"),
            store.at(prefix + ".wo")};
  }
};

struct AttentionResult {
  Tensor out;      // queries×C, after the output projection
  Tensor weights;  // queries×keys, rows sum to one
};

/// softmax(Q·Kᵀ/√C)·V·Wo for queries q[n×C] over keys/values kv[m×C].
inline AttentionResult attend(const Tensor& q, const Tensor& kv, const AttentionParams& p) {
  if (q.rank() != 2 || kv.rank() != 2 || q.cols() != kv.cols() || q.cols() != p.wq.rows()) {
    throw DimensionError("attention: query " + to_string(q.shape()) + " and key/value " +
                         to_string(kv.shape()) + " do not match projection width " +
                         std::to_string(p.wq.rows()));
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Tensor queries = matmul(q, p.wq);
  Tensor keys = matmul(kv, p.wk);
  Tensor values = matmul(kv, p.wv);
  Tensor weights = softmax_rows(scale(matmul_nt(queries, keys), inv_sqrt));
  return {matmul(matmul(weights, values), p.wo), weights};
}

/// Self-attention over tokens[T×C], with an optional residual from the input.
inline Tensor self_attention(const Tensor& tokens, const AttentionParams& p, bool residual = true) {
  if (tokens.rank() != 2 || tokens.rows() == 0) {
    throw DimensionError("self_attention: need at least one token, got " + to_string(tokens.shape()));
  }
  Tensor out = attend(tokens, tokens, p).out;
  return residual ? add(tokens, out) : out;
}

/// Cross-attention of q[N×C] onto kv[M×C]; no residual.
inline Tensor cross_attention(const Tensor& q, const Tensor& kv, const AttentionParams& p) {
  return attend(q, kv, p).out;
}

}  // namespace textpose
