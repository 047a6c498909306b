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

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "textpose/dataset.hpp"
#include "textpose/losses.hpp"
#include "textpose/model.hpp"
#include "textpose/optim.hpp"

namespace textpose {

/// A sample with its frozen embeddings and supervision precomputed.
struct PreparedSample {
  const SceneSample* sample = nullptr;
  EmbeddingBundle bundle;
  Tensor target_heatmaps;  // N×h×w
};

inline PreparedSample prepare(const Model& model, const SceneSample& s) {
  const auto& cfg = model.config();
  return {&s, model.embed(s.prompts, s.image),
          gaussian_target(s.keypoints, s.image.height / cfg.patch, s.image.width / cfg.patch,
                          cfg.sigma)};
}

inline LossBreakdown sample_loss(const Model& model, const PreparedSample& ps,
                                 Prediction* out = nullptr) {
  const auto& cfg = model.config();
  Prediction pred = model.forward(ps.sample->image, ps.bundle, ps.sample->skeleton);
  LossBreakdown loss = total_loss(heatmap_loss(pred.heatmaps, ps.target_heatmaps, cfg.heatmap_norm),
                                  offset_loss(pred.locations, ps.sample->keypoints),
                                  cfg.heatmap_weight);
  if (out) *out = std::move(pred);
  return loss;
}

struct StepRecord {
  std::size_t step = 0;
  double heatmap = 0.0;
  double offset = 0.0;
  double total = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  Model model;
  OptimState optim;
  std::vector<StepRecord> history;
};

using StepCallback = std::function<void(const StepRecord&)>;

/// Adam over minibatches of `samples` for cfg.steps steps. Batches walk a
/// seeded permutation of the samples, reshuffled every epoch; per-sample
/// gradients are summed in fixed order so runs are bit-reproducible.
inline TrainResult train(const ExperimentConfig& cfg, const std::vector<const SceneSample*>& samples,
                         const StepCallback& on_step = {}) {
  if (samples.empty() && cfg.steps > 0) throw InputError("train: empty training set");
  TrainResult r{Model::create(cfg), {}, {}};
  std::vector<PreparedSample> prepared;
  for (const auto* s : samples) prepared.push_back(prepare(r.model, *s));

  Rng shuffle(Rng::derive(cfg.seed, "batches"));
  std::vector<std::size_t> order(prepared.size());
  std::size_t cursor = order.size();
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const std::size_t batch = std::min(cfg.batch_size, prepared.size());
    std::vector<std::size_t> picked;
    while (picked.size() < batch) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.index(i)]);
        cursor = 0;
      }
      picked.push_back(order[cursor++]);
    }

    GradMap grads;
    StepRecord rec;
    rec.step = step;
    rec.lr = lr_schedule(step, cfg.steps, cfg.lr);
    const double inv = 1.0 / static_cast<double>(batch);
    for (std::size_t idx : picked) {
      LossBreakdown loss = sample_loss(r.model, prepared[idx]);
      if (!std::isfinite(loss.total)) {
        throw NumericError("train: non-finite loss at step " + std::to_string(step) +
                           " on sample " + std::to_string(prepared[idx].sample->index));
      }
      rec.heatmap += loss.heatmap * inv;
      rec.offset += loss.offset * inv;
      rec.total += loss.total * inv;
      const Gradients g = backward(loss.graph);
      for (const auto& [name, p] : r.model.params()) {
        if (!g.contains(p)) continue;
        auto gv = g.of(p);
        auto& acc = grads[name];
        if (acc.empty()) acc.assign(gv.size(), 0.0);
        for (std::size_t i = 0; i < gv.size(); ++i) acc[i] += gv[i] * inv;
      }
    }
    adam_step(r.model.params(), grads, r.optim, rec.lr);
    r.history.push_back(rec);
    if (on_step) on_step(rec);
  }
  return r;
}

}  // namespace textpose
