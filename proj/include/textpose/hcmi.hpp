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

#include <string>
#include <utility>

#include "textpose/layers.hpp"

namespace textpose {

/// Joint self-attention over [image tokens; class token] followed by a
/// per-token MLP, then split back into the two streams.
struct HcmiParams {
  AttentionParams attn;
  MlpParams mlp;

  static HcmiParams create(ParamStore& store, const std::string& prefix, std::size_t dim,
                           std::size_t hidden, Rng& rng) {
    return {AttentionParams::create(store, prefix + ".attn", dim, rng),
            MlpParams::create(store, prefix + ".mlp", dim, hidden, rng)};
  }
  static HcmiParams bind(const ParamStore& store, const std::string& prefix) {
    return {AttentionParams::bind(store, prefix + ".attn"), MlpParams::bind(store, prefix + ".mlp")};
  }
};

struct HcmiOutput {
  Tensor image;  // M×C
  Tensor cls;    // 1×C
};

/// With `residual` off this is MLP(SelfAttn(concat(image, cls))) literally;
/// with it on, both sub-blocks are wrapped in skip connections.
inline HcmiOutput hcmi_forward(const Tensor& image, const Tensor& cls, const HcmiParams& p,
                               bool residual = true) {
  if (image.rank() != 2 || cls.rank() != 2 || cls.rows() != 1 || image.cols() != cls.cols()) {
    throw DimensionError("hcmi: image " + to_string(image.shape()) + " and class " +
                         to_string(cls.shape()) + " embeddings do not match");
  }
  const std::size_t m = image.rows();
  Tensor tokens = concat_rows(image, cls);
  Tensor mixed = self_attention(tokens, p.attn, residual);
  Tensor out = residual ? add(mixed, mlp(mixed, p.mlp)) : mlp(mixed, p.mlp);
  return {slice_rows(out, 0, m), slice_rows(out, m, 1)};
}

}  // namespace textpose
