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
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "textpose/dataset.hpp"
#include "textpose/train.hpp"

namespace textpose {

inline const std::vector<double>& default_pck_thresholds() {
  static const std::vector<double> t{0.05, 0.1, 0.15, 0.2, 0.25};
  return t;
}

/// Fraction of joints whose prediction lies within τ·max(bbox.w, bbox.h) of
/// the ground truth (inclusive).
inline double pck(const Tensor& pred, const Tensor& gt, const BBox& bbox, double tau) {
  if (!(tau > 0.0)) throw InputError("pck: threshold must be positive");
  if (pred.shape() != gt.shape() || pred.rank() != 2 || pred.cols() != 2) {
    throw DimensionError("pck: prediction " + to_string(pred.shape()) + " vs ground truth " +
                         to_string(gt.shape()));
  }
  const double radius = tau * std::max(bbox.w, bbox.h);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    const double d = std::hypot(pred.at(i, 0) - gt.at(i, 0), pred.at(i, 1) - gt.at(i, 1));
    if (d <= radius) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.rows());
}

struct MetricsRow {
  std::string config;
  std::string split;
  std::size_t samples = 0;
  std::vector<double> thresholds;
  std::vector<double> pck;  // one per threshold
  double heatmap_loss = 0.0;
  double offset_loss = 0.0;
  double total_loss = 0.0;
  std::optional<double> alpha_mean, beta_mean;

  std::optional<double> mean_pck() const {
    if (pck.empty()) return std::nullopt;
    double s = 0.0;
    for (double v : pck) s += v;
    return s / static_cast<double>(pck.size());
  }

  std::optional<double> pck_at(double tau) const {
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      if (std::abs(thresholds[i] - tau) < 1e-12) return pck[i];
    return std::nullopt;
  }
};

namespace detail {
inline std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
inline std::string fixed(const std::optional<double>& v) { return v ? fixed(*v) : std::string(); }
inline std::string threshold_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}
}  // namespace detail

inline std::string csv_header(const std::vector<double>& thresholds) {
  std::string h = "config,split,samples";
  for (double t : thresholds) h += ",pck@" + detail::threshold_label(t);
  h += ",mean_pck,heatmap_loss,offset_loss,total_loss,alpha_mean,beta_mean";
  return h;
}

inline std::string csv_row(const MetricsRow& r) {
  std::string s = r.config + "," + r.split + "," + std::to_string(r.samples);
  for (double v : r.pck) s += "," + detail::fixed(v);
  s += "," + detail::fixed(r.mean_pck());
  s += "," + detail::fixed(r.heatmap_loss) + "," + detail::fixed(r.offset_loss) + "," +
       detail::fixed(r.total_loss);
  s += "," + detail::fixed(r.alpha_mean) + "," + detail::fixed(r.beta_mean);
  return s;
}

inline void write_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  if (rows.empty()) return;
  os << csv_header(rows.front().thresholds) << '\n';
  for (const auto& r : rows) os << csv_row(r) << '\n';
}

inline std::string train_history_csv(const std::vector<StepRecord>& history) {
  std::string out = "step,heatmap_loss,offset_loss,total,lr\n";
  char buf[160];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g\n", r.step, r.heatmap, r.offset,
                  r.total, r.lr);
    out += buf;
  }
  return out;
}

/// Mean PCK over samples for each threshold, mean losses, and mean gate
/// scores. `bundles`, when given, replaces the clean embeddings per sample.
inline MetricsRow evaluate(const Model& model, const std::vector<const SceneSample*>& samples,
                           const std::vector<double>& thresholds, const std::string& split,
                           const std::vector<EmbeddingBundle>* bundles = nullptr) {
  if (bundles && bundles->size() != samples.size()) {
    throw DimensionError("evaluate: one embedding bundle per sample required");
  }
  NoGradGuard no_grad;
  MetricsRow row;
  row.config = model.config().name;
  row.split = split;
  row.samples = samples.size();
  row.thresholds = thresholds;
  row.pck.assign(thresholds.size(), 0.0);
  double alpha = 0.0, beta = 0.0;
  std::size_t gated = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    PreparedSample ps = prepare(model, *samples[k]);
    if (bundles) ps.bundle = (*bundles)[k];
    Prediction pred;
    LossBreakdown loss = sample_loss(model, ps, &pred);
    row.heatmap_loss += loss.heatmap;
    row.offset_loss += loss.offset;
    row.total_loss += loss.total;
    for (std::size_t t = 0; t < thresholds.size(); ++t)
      row.pck[t] += pck(pred.coords, samples[k]->keypoints, samples[k]->bbox, thresholds[t]);
    if (pred.alpha.defined()) {
      double a = 0.0, b = 0.0;
      for (double v : pred.alpha.data()) a += v;
      for (double v : pred.beta.data()) b += v;
      alpha += a / static_cast<double>(pred.alpha.size());
      beta += b / static_cast<double>(pred.beta.size());
      ++gated;
    }
  }
  if (!samples.empty()) {
    const double n = static_cast<double>(samples.size());
    for (double& v : row.pck) v /= n;
    row.heatmap_loss /= n;
    row.offset_loss /= n;
    row.total_loss /= n;
  }
  if (gated) {
    row.alpha_mean = alpha / static_cast<double>(gated);
    row.beta_mean = beta / static_cast<double>(gated);
  }
  return row;
}

/// Expected PCK of uniform random predictions in [0,1]², by Monte Carlo.
inline std::vector<double> chance_pck(const std::vector<const SceneSample*>& samples,
                                      const std::vector<double>& thresholds, std::size_t trials,
                                      std::uint64_t seed) {
  Rng rng(Rng::derive(seed, "chance"));
  std::vector<double> out(thresholds.size(), 0.0);
  if (samples.empty() || trials == 0) return out;
  for (std::size_t t = 0; t < trials; ++t) {
    for (const auto* s : samples) {
      std::vector<double> guess(s->keypoints.size());
      for (double& v : guess) v = rng.uniform();
      Tensor g = Tensor::from(s->keypoints.shape(), std::move(guess));
      for (std::size_t k = 0; k < thresholds.size(); ++k)
        out[k] += pck(g, s->keypoints, s->bbox, thresholds[k]);
    }
  }
  for (double& v : out) v /= static_cast<double>(trials * samples.size());
  return out;
}

}  // namespace textpose
