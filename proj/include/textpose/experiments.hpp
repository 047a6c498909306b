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
#include <vector>

#include "textpose/dataset.hpp"
#include "textpose/metrics.hpp"
#include "textpose/train.hpp"

namespace textpose {

// ---------------------------------------------------------------------------
// Module ablation
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& ablation_labels() {
  static const std::vector<std::string> labels{"full", "no-hcmi", "no-dsfr", "no-lw"};
  return labels;
}

inline ExperimentConfig ablation_variant(const ExperimentConfig& base, const std::string& label) {
  ExperimentConfig c = base;
  c.name = label;
  c.flags = {};
  if (label == "no-hcmi") c.flags.use_hcmi = false;
  else if (label == "no-dsfr") c.flags.use_dsfr = false;
  else if (label == "no-lw") c.flags.use_learnable_weights = false;
  else if (label != "full") throw ConfigError("unknown ablation variant: " + label);
  return c;
}

struct AblationRun {
  ExperimentConfig config;
  TrainResult result;
  MetricsRow row;
};

/// Trains the four variants with the base seed on the train split and
/// evaluates each on `eval_split`.
inline std::vector<AblationRun> run_ablation(const ExperimentConfig& base, const Dataset& data,
                                             Split eval_split = Split::holdout,
                                             const std::vector<double>& thresholds = default_pck_thresholds()) {
  const auto train_set = select_split(data, base, Split::train);
  const auto eval_set = select_split(data, base, eval_split);
  std::vector<AblationRun> runs;
  for (const auto& label : ablation_labels()) {
    AblationRun run;
    run.config = ablation_variant(base, label);
    run.result = train(run.config, train_set);
    run.row = evaluate(run.result.model, eval_set, thresholds, split_name(eval_split));
    runs.push_back(std::move(run));
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Prompt noise
// ---------------------------------------------------------------------------

struct NoiseSuiteResult {
  std::vector<PromptSet> perturbed;    // prompts actually used per sample
  std::vector<bool> class_changed;     // e_cls differs bitwise from the clean run
  std::vector<std::size_t> joints_changed;  // keypoint prompts altered per sample
  MetricsRow clean;
  MetricsRow noisy;
  MetricsRow delta;  // noisy − clean
};

/// Perturbs each sample's prompts with probability `rate` (per sample for class
/// noise, per keypoint prompt for typos), then evaluates clean and noisy.
inline NoiseSuiteResult run_noise_suite(const Model& model, const Dataset& data,
                                        const std::vector<const SceneSample*>& samples,
                                        NoiseKind kind, double rate, std::uint64_t seed,
                                        const std::string& split,
                                        const std::vector<double>& thresholds = default_pck_thresholds()) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InputError("noise rate must lie in [0,1]");
  std::vector<std::string> names;
  for (const auto* s : samples) {
    const auto& n = s->prompts.category;
    if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
  }
  if (names.size() < 2) names = data.category_names();

  NoiseSuiteResult out;
  std::vector<EmbeddingBundle> bundles;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const SceneSample& s = *samples[k];
    Rng rng(Rng::derive(seed, "noise-" + std::to_string(s.index)));
    PromptSet p = s.prompts;
    std::size_t changed = 0;
    if (kind == NoiseKind::class_substitute && rng.uniform() < rate) {
      p.category = perturb_prompt(p.category, kind, rng.next(), names);
    }
    if (kind == NoiseKind::typo) {
      for (auto& kp : p.keypoints) {
        if (rng.uniform() < rate) {
          kp = perturb_prompt(kp, kind, rng.next());
          ++changed;
        }
      }
    }
    EmbeddingBundle clean = model.embed(s.prompts, s.image);
    EmbeddingBundle noisy = model.embed(p, s.image);
    out.class_changed.push_back(!std::equal(clean.cls.data().begin(), clean.cls.data().end(),
                                            noisy.cls.data().begin()));
    out.joints_changed.push_back(changed);
    out.perturbed.push_back(std::move(p));
    bundles.push_back(std::move(noisy));
  }

  const std::string tag = kind == NoiseKind::typo ? "typo" : (kind == NoiseKind::class_substitute ? "class" : "none");
  out.clean = evaluate(model, samples, thresholds, split + "/clean");
  out.noisy = evaluate(model, samples, thresholds, split + "/" + tag + "@" + detail::threshold_label(rate), &bundles);
  out.delta = out.noisy;
  out.delta.split = split + "/delta";
  for (std::size_t t = 0; t < thresholds.size(); ++t) out.delta.pck[t] -= out.clean.pck[t];
  out.delta.heatmap_loss -= out.clean.heatmap_loss;
  out.delta.offset_loss -= out.clean.offset_loss;
  out.delta.total_loss -= out.clean.total_loss;
  if (out.delta.alpha_mean && out.clean.alpha_mean) {
    *out.delta.alpha_mean -= *out.clean.alpha_mean;
    *out.delta.beta_mean -= *out.clean.beta_mean;
  }
  return out;
}

}  // namespace textpose
