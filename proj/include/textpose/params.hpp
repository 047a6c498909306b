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

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "textpose/rng.hpp"
#include "textpose/tensor.hpp"

namespace textpose {

/// Learnable tensors keyed by module path (e.g. "dsfr.gate_img.w"). Iteration
/// order is lexicographic by name, which fixes checkpoint and update order.
class ParamStore {
 public:
  const Tensor& add(const std::string& name, Shape shape, std::vector<double> values) {
    if (params_.count(name)) throw ContractError("parameter registered twice: " + name);
    return params_.emplace(name, Tensor::from(std::move(shape), std::move(values), true))
        .first->second;
  }

  const Tensor& add_normal(const std::string& name, Shape shape, double stddev, Rng& rng) {
    auto n = numel(shape);
    return add(name, std::move(shape), rng.normals(n, stddev));
  }

  const Tensor& add_zeros(const std::string& name, Shape shape) {
    auto n = numel(shape);
    return add(name, std::move(shape), std::vector<double>(n, 0.0));
  }

  const Tensor& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("unknown parameter: " + name);
    return it->second;
  }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : params_) n += t.size();
    return n;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : params_) out.push_back(name);
    return out;
  }

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Tensor> params_;
};

}  // namespace textpose
