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
#include <vector>

#include "textpose/encoders.hpp"
#include "textpose/tensor.hpp"

namespace textpose {

/// Per-joint Gaussian blobs on an h×w cell grid: value
/// exp(-‖centre(p) − coord·(w,h)‖² / 2σ²), σ in cells. Returns N×h×w.
inline Tensor gaussian_target(const Tensor& coords, std::size_t h, std::size_t w, double sigma) {
  if (coords.rank() != 2 || coords.cols() != 2) {
    throw DimensionError("gaussian_target: coordinates must be N×2");
  }
  if (sigma <= 0.0) throw InputError("gaussian_target: sigma must be positive");
  const std::size_t n = coords.rows();
  std::vector<double> out(n * h * w);
  for (std::size_t i = 0; i < n; ++i) {
    const double cx = coords.at(i, 0), cy = coords.at(i, 1);
    if (!(cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0)) {
      throw InputError("gaussian_target: coordinate outside [0,1]^2");
    }
    const double tx = cx * static_cast<double>(w), ty = cy * static_cast<double>(h);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - tx;
        const double dy = static_cast<double>(y) + 0.5 - ty;
        out[(i * h + y) * w + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      }
    }
  }
  return Tensor::from({n, h, w}, std::move(out));
}

enum class HeatmapNorm { l2, l1 };

/// (1/N) Σ_i (1/(h·w)) Σ_p ρ(sigmoid(H_i[p]) − Ĥ_i[p]), ρ = square (l2) or |·| (l1).
inline Tensor heatmap_loss(const Tensor& logits, const Tensor& target,
                           HeatmapNorm norm = HeatmapNorm::l2) {
  if (logits.shape() != target.shape()) {
    throw DimensionError("heatmap_loss: shapes " + to_string(logits.shape()) + " and " +
                         to_string(target.shape()) + " differ");
  }
  Tensor diff = sub(sigmoid(logits), target);
  return mean(norm == HeatmapNorm::l2 ? square(diff) : abs(diff));
}

/// (1/L) Σ_l Σ_i |P^l_i − P̂_i|₁ over both coordinates.
inline Tensor offset_loss(const std::vector<Tensor>& layers, const Tensor& target) {
  if (layers.empty()) throw DimensionError("offset_loss: no decoder layers");
  Tensor total;
  for (const auto& p : layers) {
    if (p.shape() != target.shape()) {
      throw DimensionError("offset_loss: layer shape " + to_string(p.shape()) +
                           " differs from target " + to_string(target.shape()));
    }
    Tensor l1 = sum(abs(sub(p, target)));
    total = total.defined() ? add(total, l1) : l1;
  }
  return scale(total, 1.0 / static_cast<double>(layers.size()));
}

inline constexpr double kDefaultHeatmapWeight = 2.0;

struct LossBreakdown {
  double heatmap = 0.0;
  double offset = 0.0;
  double total = 0.0;
  double heatmap_weight = kDefaultHeatmapWeight;
  Tensor graph;  // differentiable total, when built from tensors
};

/// λ·heatmap + offset.
inline LossBreakdown total_loss(const Tensor& heatmap, const Tensor& offset,
                                double heatmap_weight = kDefaultHeatmapWeight) {
  LossBreakdown b;
  b.heatmap_weight = heatmap_weight;
  b.graph = add(scale(heatmap, heatmap_weight), offset);
  b.heatmap = heatmap.item();
  b.offset = offset.item();
  b.total = b.graph.item();
  return b;
}

inline LossBreakdown total_loss(double heatmap, double offset,
                                double heatmap_weight = kDefaultHeatmapWeight) {
  return {heatmap, offset, heatmap_weight * heatmap + offset, heatmap_weight, {}};
}

}  // namespace textpose
