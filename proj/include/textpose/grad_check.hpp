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
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "textpose/params.hpp"
#include "textpose/tensor.hpp"

namespace textpose {

class DeterminismError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParamGradError {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradReport {
  std::vector<ParamGradError> params;
  double tolerance = 0.0;
  bool pass = true;

  double max_rel_error() const {
    double m = 0.0;
    for (const auto& p : params) m = std::max(m, p.max_rel_error);
    return m;
  }
};

struct GradCheckOptions {
  double step = 1e-4;
  // Lower bound on the normalizer, so parameters whose gradient is zero in
  // exact arithmetic are compared against rounding noise, not divided by it.
  double floor = 1e-6;
};

/// Compares backward() against central differences for every scalar of every
/// parameter. The relative error of a parameter is
///   max_i |analytic_i - numeric_i| / max(max_i |analytic_i|, max_i |numeric_i|, floor).
inline GradReport grad_check(const std::function<Tensor()>& closure,
                             const std::vector<std::pair<std::string, Tensor>>& params,
                             double tolerance, GradCheckOptions opts = {}) {
  Tensor loss = closure();
  {
    NoGradGuard ng;
    Tensor again = closure();
    if (again.item() != loss.item()) {
      throw DeterminismError("grad_check: closure returned different values for equal parameters");
    }
  }
  const Gradients grads = backward(loss);

  GradReport report;
  report.tolerance = tolerance;
  NoGradGuard ng;
  for (const auto& [name, p] : params) {
    const std::vector<double> analytic = grads.of(p);
    std::vector<double> numeric(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p.assign_at(i, saved + opts.step);
      const double up = closure().item();
      p.assign_at(i, saved - opts.step);
      const double down = closure().item();
      p.assign_at(i, saved);
      numeric[i] = (up - down) / (2.0 * opts.step);
    }
    double scale_ref = opts.floor, worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      scale_ref = std::max({scale_ref, std::abs(analytic[i]), std::abs(numeric[i])});
      worst = std::max(worst, std::abs(analytic[i] - numeric[i]));
    }
    ParamGradError e{name, worst / scale_ref, worst};
    report.pass = report.pass && e.max_rel_error <= tolerance;
    report.params.push_back(std::move(e));
  }
  return report;
}

inline GradReport grad_check(const std::function<Tensor()>& closure, const ParamStore& params,
                             double tolerance, GradCheckOptions opts = {}) {
  std::vector<std::pair<std::string, Tensor>> list(params.begin(), params.end());
  return grad_check(closure, list, tolerance, opts);
}

}  // namespace textpose
