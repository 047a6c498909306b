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
#include <string>
#include <utility>
#include <vector>

#include "textpose/encoders.hpp"
#include "textpose/layers.hpp"

namespace textpose {

struct FeatureMap {
  Tensor tokens;  // (h·w)×C, row-major over the grid
  std::size_t h = 0;
  std::size_t w = 0;
};

/// Undirected keypoint graph without self-loops.
class Skeleton {
 public:
  Skeleton() = default;

  Skeleton(std::size_t joints, std::vector<std::pair<std::size_t, std::size_t>> edges)
      : joints_(joints) {
    for (auto [a, b] : edges) {
      if (a >= joints || b >= joints) throw InputError("skeleton: edge index out of range");
      if (a == b) throw InputError("skeleton: self-loop on joint " + std::to_string(a));
      if (a > b) std::swap(a, b);
      if (std::find(edges_.begin(), edges_.end(), std::pair{a, b}) == edges_.end())
        edges_.emplace_back(a, b);
    }
  }

  /// From a dense 0/1 matrix; rejects asymmetric input and self-loops.
  static Skeleton from_adjacency(std::size_t joints, const std::vector<int>& adjacency) {
    if (adjacency.size() != joints * joints) throw InputError("skeleton: adjacency is not N×N");
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < joints; ++i) {
      if (adjacency[i * joints + i]) throw InputError("skeleton: non-zero diagonal");
      for (std::size_t j = i + 1; j < joints; ++j) {
        if (adjacency[i * joints + j] != adjacency[j * joints + i])
          throw InputError("skeleton: adjacency is not symmetric");
        if (adjacency[i * joints + j]) edges.emplace_back(i, j);
      }
    }
    return Skeleton(joints, std::move(edges));
  }

  std::size_t joints() const { return joints_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }

  std::vector<int> adjacency() const {
    std::vector<int> a(joints_ * joints_, 0);
    for (auto [i, j] : edges_) a[i * joints_ + j] = a[j * joints_ + i] = 1;
    return a;
  }

  /// D^(-1/2)(A+I)D^(-1/2).
  Tensor normalized_adjacency() const {
    const std::size_t n = joints_;
    std::vector<double> a(n * n, 0.0), deg(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
    for (auto [i, j] : edges_) {
      a[i * n + j] = a[j * n + i] = 1.0;
      deg[i] += 1.0;
      deg[j] += 1.0;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[i * n + j] /= std::sqrt(deg[i] * deg[j]);
    return Tensor::from({n, n}, std::move(a));
  }

  bool operator==(const Skeleton&) const = default;

 private:
  std::size_t joints_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
};

// ---------------------------------------------------------------------------
// Backbone
// ---------------------------------------------------------------------------

struct BackboneParams {
  LinearParams patch;  // P²→C
  struct Mix {
    LinearParams self;
    Tensor neighbor;  // C×C
  };
  std::vector<Mix> mix;

  static BackboneParams create(ParamStore& store, const std::string& prefix, std::size_t patch,
                               std::size_t dim, std::size_t mix_layers, Rng& rng) {
    BackboneParams p;
    p.patch = LinearParams::create(store, prefix + ".patch", patch * patch, dim, rng);
    for (std::size_t k = 0; k < mix_layers; ++k) {
      const std::string name = prefix + ".mix" + std::to_string(k);
      Mix m;
      m.self = LinearParams::create(store, name + ".self", dim, dim, rng);
      m.neighbor = store.add_normal(name + ".neighbor", {dim, dim}, fan_in_std(dim), rng);
      p.mix.push_back(std::move(m));
    }
    return p;
  }
  static BackboneParams bind(const ParamStore& store, const std::string& prefix,
                             std::size_t mix_layers) {
    BackboneParams p;
    p.patch = LinearParams::bind(store, prefix + ".patch");
    for (std::size_t k = 0; k < mix_layers; ++k) {
      const std::string name = prefix + ".mix" + std::to_string(k);
      p.mix.push_back({LinearParams::bind(store, name + ".self"), store.at(name + ".neighbor")});
    }
    return p;
  }
};

/// Non-overlapping P×P patches flattened row-major, one row per grid cell.
inline Tensor patchify(const Image& image, std::size_t patch) {
  if (patch == 0 || image.height % patch || image.width % patch) {
    throw InputError("patchify: image " + std::to_string(image.height) + "x" +
                     std::to_string(image.width) + " not divisible by patch " +
                     std::to_string(patch));
  }
  const std::size_t gh = image.height / patch, gw = image.width / patch;
  std::vector<double> out(gh * gw * patch * patch);
  std::size_t k = 0;
  for (std::size_t gy = 0; gy < gh; ++gy)
    for (std::size_t gx = 0; gx < gw; ++gx)
      for (std::size_t y = 0; y < patch; ++y)
        for (std::size_t x = 0; x < patch; ++x) out[k++] = image.at(gy * patch + y, gx * patch + x);
  return Tensor::from({gh * gw, patch * patch}, std::move(out));
}

/// Row-stochastic 4-neighbourhood averaging over an h×w grid (no self term).
inline Tensor grid_neighbor_mean(std::size_t h, std::size_t w) {
  std::vector<double> s(h * w * h * w, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::vector<std::size_t> nb;
      if (y > 0) nb.push_back((y - 1) * w + x);
      if (y + 1 < h) nb.push_back((y + 1) * w + x);
      if (x > 0) nb.push_back(y * w + x - 1);
      if (x + 1 < w) nb.push_back(y * w + x + 1);
      for (auto q : nb) s[(y * w + x) * h * w + q] = 1.0 / static_cast<double>(nb.size());
    }
  }
  return Tensor::from({h * w, h * w}, std::move(s));
}

/// Patch embedding only: patches·W + b.
inline FeatureMap patch_embed(const Image& image, std::size_t patch, const LinearParams& p) {
  return {linear(patchify(image, patch), p), image.height / patch, image.width / patch};
}

/// Patch embedding followed by residual mixing layers
///   X ← X + relu(X·Ws + N(X)·Wn + b), N = 4-neighbour mean.
inline FeatureMap backbone_features(const Image& image, std::size_t patch,
                                    const BackboneParams& p) {
  FeatureMap f = patch_embed(image, patch, p.patch);
  if (p.mix.empty()) return f;
  const Tensor neighbors = grid_neighbor_mean(f.h, f.w);
  for (const auto& m : p.mix) {
    Tensor local = add(linear(f.tokens, m.self), matmul(matmul(neighbors, f.tokens), m.neighbor));
    f.tokens = add(f.tokens, relu(local));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Transformer encoder
// ---------------------------------------------------------------------------

/// Fixed 2-D sinusoidal encoding; the first C/2 channels encode the row, the
/// rest the column, as interleaved sin/cos pairs. C must be divisible by 4.
inline Tensor positional_encoding(std::size_t h, std::size_t w, std::size_t dim) {
  if (dim % 4) throw DimensionError("positional_encoding: width must be divisible by 4");
  const std::size_t quarter = dim / 4;
  std::vector<double> pe(h * w * dim);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double* row = &pe[(y * w + x) * dim];
      for (std::size_t k = 0; k < quarter; ++k) {
        const double freq = std::pow(10000.0, -static_cast<double>(k) / static_cast<double>(quarter));
        row[2 * k] = std::sin(static_cast<double>(y) * freq);
        row[2 * k + 1] = std::cos(static_cast<double>(y) * freq);
        row[dim / 2 + 2 * k] = std::sin(static_cast<double>(x) * freq);
        row[dim / 2 + 2 * k + 1] = std::cos(static_cast<double>(x) * freq);
      }
    }
  }
  return Tensor::from({h * w, dim}, std::move(pe));
}

struct EncoderLayerParams {
  AttentionParams attn;
  MlpParams mlp;
};

inline std::vector<EncoderLayerParams> create_encoder(ParamStore& store, const std::string& prefix,
                                                      std::size_t dim, std::size_t hidden,
                                                      std::size_t layers, Rng& rng) {
  std::vector<EncoderLayerParams> out;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string name = prefix + "." + std::to_string(l);
    out.push_back({AttentionParams::create(store, name + ".attn", dim, rng),
                   MlpParams::create(store, name + ".mlp", dim, hidden, rng)});
  }
  return out;
}

inline std::vector<EncoderLayerParams> bind_encoder(const ParamStore& store,
                                                    const std::string& prefix, std::size_t layers) {
  std::vector<EncoderLayerParams> out;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string name = prefix + "." + std::to_string(l);
    out.push_back({AttentionParams::bind(store, name + ".attn"), MlpParams::bind(store, name + ".mlp")});
  }
  return out;
}

/// Adds positional encodings once, then applies each layer as
///   X ← X + SelfAttn(X);  X ← X + MLP(X).
inline FeatureMap encoder_refine(const FeatureMap& feat, const std::vector<EncoderLayerParams>& layers) {
  FeatureMap out = feat;
  out.tokens = add(feat.tokens, positional_encoding(feat.h, feat.w, feat.tokens.cols()));
  for (const auto& layer : layers) {
    out.tokens = self_attention(out.tokens, layer.attn, /*residual=*/true);
    out.tokens = add(out.tokens, mlp(out.tokens, layer.mlp));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Proposal generator
// ---------------------------------------------------------------------------

/// H[i, p] = ⟨joint[i], feat[p]⟩, returned as N×(h·w) raw logits.
inline Tensor proposal_heatmaps(const FeatureMap& feat, const Tensor& joint) {
  if (joint.rank() != 2 || joint.cols() != feat.tokens.cols()) {
    throw DimensionError("proposal_heatmaps: joint width " + std::to_string(joint.cols()) +
                         " differs from feature width " + std::to_string(feat.tokens.cols()));
  }
  return matmul_nt(joint, feat.tokens);
}

// ---------------------------------------------------------------------------
// Graph decoder
// ---------------------------------------------------------------------------

struct DecoderLayerParams {
  Tensor graph;  // C×C
  AttentionParams attn;
  MlpParams mlp;
  LinearParams loc;  // C→2
};

inline std::vector<DecoderLayerParams> create_decoder(ParamStore& store, const std::string& prefix,
                                                      std::size_t dim, std::size_t hidden,
                                                      std::size_t layers, Rng& rng) {
  std::vector<DecoderLayerParams> out;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string name = prefix + "." + std::to_string(l);
    DecoderLayerParams d;
    d.graph = store.add_normal(name + ".graph", {dim, dim}, fan_in_std(dim), rng);
    d.attn = AttentionParams::create(store, name + ".attn", dim, rng);
    d.mlp = MlpParams::create(store, name + ".mlp", dim, hidden, rng);
    d.loc = LinearParams::create(store, name + ".loc", dim, 2, rng);
    out.push_back(std::move(d));
  }
  return out;
}

inline std::vector<DecoderLayerParams> bind_decoder(const ParamStore& store,
                                                    const std::string& prefix, std::size_t layers) {
  std::vector<DecoderLayerParams> out;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string name = prefix + "." + std::to_string(l);
    out.push_back({store.at(name + ".graph"), AttentionParams::bind(store, name + ".attn"),
                   MlpParams::bind(store, name + ".mlp"), LinearParams::bind(store, name + ".loc")});
  }
  return out;
}

struct DecoderOutput {
  std::vector<Tensor> locations;  // one N×2 estimate in [0,1]² per layer
  Tensor nodes;                   // final N×C node features
};

/// Per layer:
///   X ← X + Â·X·Wg;  X ← X + CrossAttn(X, feat);  X ← X + MLP(X);
///   P = sigmoid(X·Wloc + bloc).
inline DecoderOutput graph_decoder(const Tensor& joint, const FeatureMap& feat,
                                   const Skeleton& skeleton,
                                   const std::vector<DecoderLayerParams>& layers) {
  if (joint.rank() != 2 || skeleton.joints() != joint.rows()) {
    throw DimensionError("graph_decoder: skeleton has " + std::to_string(skeleton.joints()) +
                         " joints, embedding has " + std::to_string(joint.rows()) + " rows");
  }
  const Tensor adj = skeleton.normalized_adjacency();
  DecoderOutput out;
  Tensor x = joint;
  for (const auto& layer : layers) {
    x = add(x, matmul(matmul(adj, x), layer.graph));
    x = add(x, cross_attention(x, feat.tokens, layer.attn));
    x = add(x, mlp(x, layer.mlp));
    out.locations.push_back(sigmoid(linear(x, layer.loc)));
  }
  out.nodes = x;
  return out;
}

// ---------------------------------------------------------------------------
// Keypoint decoding
// ---------------------------------------------------------------------------

/// Offset field N×h×w×2 (cell units) pulling every cell centre towards the
/// given location, clamped to ±radius cells per axis.
inline Tensor offsets_toward(const Tensor& location, std::size_t h, std::size_t w,
                             double radius = 1.0) {
  const std::size_t n = location.rows();
  std::vector<double> out(n * h * w * 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double tx = location.at(i, 0) * static_cast<double>(w);
    const double ty = location.at(i, 1) * static_cast<double>(h);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double* o = &out[((i * h + y) * w + x) * 2];
        o[0] = std::clamp(tx - (static_cast<double>(x) + 0.5), -radius, radius);
        o[1] = std::clamp(ty - (static_cast<double>(y) + 0.5), -radius, radius);
      }
    }
  }
  return Tensor::from({n, h, w, 2}, std::move(out));
}

/// Per joint: argmax cell (ties → lowest row-major index), plus its offset,
/// mapped to normalized [0,1]² (x, y).
inline Tensor decode_keypoints(const Tensor& heatmaps, const Tensor& offsets) {
  if (heatmaps.rank() != 3 || offsets.rank() != 4 || offsets.shape()[3] != 2 ||
      offsets.shape()[0] != heatmaps.shape()[0] || offsets.shape()[1] != heatmaps.shape()[1] ||
      offsets.shape()[2] != heatmaps.shape()[2]) {
    throw DimensionError("decode_keypoints: heatmaps " + to_string(heatmaps.shape()) +
                         " and offsets " + to_string(offsets.shape()) + " are inconsistent");
  }
  const std::size_t n = heatmaps.shape()[0], h = heatmaps.shape()[1], w = heatmaps.shape()[2];
  auto hm = heatmaps.data();
  auto off = offsets.data();
  std::vector<double> out(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double* map = &hm[i * h * w];
    const std::size_t best = static_cast<std::size_t>(std::max_element(map, map + h * w) - map);
    const std::size_t by = best / w, bx = best % w;
    const double* o = &off[(i * h * w + best) * 2];
    out[2 * i] = std::clamp((static_cast<double>(bx) + 0.5 + o[0]) / static_cast<double>(w), 0.0, 1.0);
    out[2 * i + 1] = std::clamp((static_cast<double>(by) + 0.5 + o[1]) / static_cast<double>(h), 0.0, 1.0);
  }
  return Tensor::from({n, 2}, std::move(out));
}

}  // namespace textpose
