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
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "textpose/params.hpp"

namespace textpose {

using GradMap = std::map<std::string, std::vector<double>>;

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimState {
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update of every parameter in `params`. Parameters
/// missing from `grads` are treated as having zero gradient.
inline void adam_step(const ParamStore& params, const GradMap& grads, OptimState& state, double lr,
                      const AdamConfig& cfg = {}) {
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw ContractError("adam_step: gradient for unknown parameter " + name);
    if (g.size() != params.at(name).size()) {
      throw DimensionError("adam_step: gradient size mismatch for " + name);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (const auto& [name, p] : params) {
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) {
      m.assign(p.size(), 0.0);
      v.assign(p.size(), 0.0);
    }
    if (m.size() != p.size()) throw DimensionError("adam_step: moment size mismatch for " + name);
    auto git = grads.find(name);
    std::vector<double> values(p.data().begin(), p.data().end());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = git == grads.end() ? 0.0 : git->second[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      values[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
    }
    p.assign(values);
  }
}

/// Step decay shaped like "drop ×10 at 80% and again at 90% of training".
inline double lr_schedule(std::uint64_t step, std::uint64_t total_steps, double base_lr) {
  if (total_steps == 0) return base_lr;
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  if (frac < 0.8) return base_lr;
  if (frac < 0.9) return base_lr / 10.0;
  return base_lr / 100.0;
}

}  // namespace textpose
