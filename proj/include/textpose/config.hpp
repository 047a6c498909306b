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
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "textpose/dsfr.hpp"
#include "textpose/encoders.hpp"
#include "textpose/losses.hpp"

namespace textpose {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything that defines one experiment. Serialized as flat `key=value`
/// lines; see to_text() for the full key list.
struct ExperimentConfig {
  std::string name = "full";
  std::uint64_t seed = 7;

  // dataset
  std::string data;  // dataset directory; empty = generate in memory
  std::size_t n_categories = 14;
  std::size_t instances_per_category = 6;
  std::size_t train_instances = 1;  // per training category; the rest form the holdout split
  std::vector<std::size_t> train_categories{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<std::size_t> val_categories{8, 9};
  std::vector<std::size_t> test_categories{10, 11, 12, 13};

  // model
  std::size_t dim = 64;
  std::size_t image_tokens = 4;
  std::size_t patch = 8;
  std::size_t mix_layers = 2;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 3;
  std::size_t hidden_mult = 2;
  AblationFlags flags;
  bool hcmi_residual = true;
  bool dsfr_outer_residual = true;
  double offset_radius = 1.0;

  // training
  HeatmapNorm heatmap_norm = HeatmapNorm::l2;
  double heatmap_weight = kDefaultHeatmapWeight;
  double sigma = 1.5;
  std::size_t steps = 2000;
  std::size_t batch_size = 8;
  double lr = 1e-3;

  // noise suite
  NoiseKind noise_kind = NoiseKind::none;
  double noise_rate = 0.0;

  std::string to_text() const;
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  void validate() const;
};

namespace detail {

inline std::string join_ids(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string noise_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::none: return "none";
    case NoiseKind::typo: return "typo";
    case NoiseKind::class_substitute: return "class";
  }
  return "none";
}

inline std::string trim(std::string s) {
  const char* ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  const auto end = s.find_last_not_of(ws);
  s.erase(end == std::string::npos ? 0 : end + 1);
  return s;
}

}  // namespace detail

inline std::string ExperimentConfig::to_text() const {
  using detail::format_double;
  std::ostringstream os;
  os << "name=" << name << '\n'
     << "seed=" << seed << '\n'
     << "data=" << data << '\n'
     << "n_categories=" << n_categories << '\n'
     << "instances_per_category=" << instances_per_category << '\n'
     << "train_instances=" << train_instances << '\n'
     << "train_categories=" << detail::join_ids(train_categories) << '\n'
     << "val_categories=" << detail::join_ids(val_categories) << '\n'
     << "test_categories=" << detail::join_ids(test_categories) << '\n'
     << "dim=" << dim << '\n'
     << "image_tokens=" << image_tokens << '\n'
     << "patch=" << patch << '\n'
     << "mix_layers=" << mix_layers << '\n'
     << "encoder_layers=" << encoder_layers << '\n'
     << "decoder_layers=" << decoder_layers << '\n'
     << "hidden_mult=" << hidden_mult << '\n'
     << "use_hcmi=" << flags.use_hcmi << '\n'
     << "use_dsfr=" << flags.use_dsfr << '\n'
     << "use_learnable_weights=" << flags.use_learnable_weights << '\n'
     << "hcmi_residual=" << hcmi_residual << '\n'
     << "dsfr_outer_residual=" << dsfr_outer_residual << '\n'
     << "offset_radius=" << format_double(offset_radius) << '\n'
     << "heatmap_norm=" << (heatmap_norm == HeatmapNorm::l2 ? "l2" : "l1") << '\n'
     << "heatmap_weight=" << format_double(heatmap_weight) << '\n'
     << "sigma=" << format_double(sigma) << '\n'
     << "steps=" << steps << '\n'
     << "batch_size=" << batch_size << '\n'
     << "lr=" << format_double(lr) << '\n'
     << "noise_kind=" << detail::noise_name(noise_kind) << '\n'
     << "noise_rate=" << format_double(noise_rate) << '\n';
  return os.str();
}

inline ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    auto fail = [&](const std::string& why) {
      return ConfigError("config line " + std::to_string(lineno) + " (" + key + "): " + why);
    };
    auto as_size = [&]() -> std::size_t {
      try {
        std::size_t pos = 0;
        auto v = std::stoull(value, &pos);
        if (pos != value.size() || value.front() == '-') throw fail("not a non-negative integer");
        return static_cast<std::size_t>(v);
      } catch (const std::logic_error&) {
        throw fail("not a non-negative integer");
      }
    };
    auto as_double = [&]() -> double {
      try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw fail("not a number");
        return v;
      } catch (const std::logic_error&) {
        throw fail("not a number");
      }
    };
    auto as_bool = [&]() -> bool {
      if (value == "1" || value == "true" || value == "on") return true;
      if (value == "0" || value == "false" || value == "off") return false;
      throw fail("not a boolean");
    };
    auto as_ids = [&]() {
      std::vector<std::size_t> ids;
      std::istringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        tok = detail::trim(tok);
        if (tok.empty()) continue;
        try {
          ids.push_back(static_cast<std::size_t>(std::stoull(tok)));
        } catch (const std::logic_error&) {
          throw fail("bad category id '" + tok + "'");
        }
      }
      return ids;
    };

    if (key == "name") c.name = value;
    else if (key == "seed") c.seed = as_size();
    else if (key == "data") c.data = value;
    else if (key == "n_categories") c.n_categories = as_size();
    else if (key == "instances_per_category") c.instances_per_category = as_size();
    else if (key == "train_instances") c.train_instances = as_size();
    else if (key == "train_categories") c.train_categories = as_ids();
    else if (key == "val_categories") c.val_categories = as_ids();
    else if (key == "test_categories") c.test_categories = as_ids();
    else if (key == "dim") c.dim = as_size();
    else if (key == "image_tokens") c.image_tokens = as_size();
    else if (key == "patch") c.patch = as_size();
    else if (key == "mix_layers") c.mix_layers = as_size();
    else if (key == "encoder_layers") c.encoder_layers = as_size();
    else if (key == "decoder_layers") c.decoder_layers = as_size();
    else if (key == "hidden_mult") c.hidden_mult = as_size();
    else if (key == "use_hcmi") c.flags.use_hcmi = as_bool();
    else if (key == "use_dsfr") c.flags.use_dsfr = as_bool();
    else if (key == "use_learnable_weights") c.flags.use_learnable_weights = as_bool();
    else if (key == "hcmi_residual") c.hcmi_residual = as_bool();
    else if (key == "dsfr_outer_residual") c.dsfr_outer_residual = as_bool();
    else if (key == "offset_radius") c.offset_radius = as_double();
    else if (key == "heatmap_norm") {
      if (value == "l2") c.heatmap_norm = HeatmapNorm::l2;
      else if (value == "l1") c.heatmap_norm = HeatmapNorm::l1;
      else throw fail("expected l1 or l2");
    } else if (key == "heatmap_weight") c.heatmap_weight = as_double();
    else if (key == "sigma") c.sigma = as_double();
    else if (key == "steps") c.steps = as_size();
    else if (key == "batch_size") c.batch_size = as_size();
    else if (key == "lr") c.lr = as_double();
    else if (key == "noise_kind") {
      try {
        c.noise_kind = parse_noise_kind(value);
      } catch (const InputError& e) {
        throw fail(e.what());
      }
    } else if (key == "noise_rate") c.noise_rate = as_double();
    else throw fail("unknown key");
  }
  c.validate();
  return c;
}

inline ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

inline void ExperimentConfig::validate() const {
  if (n_categories < 2) throw ConfigError("n_categories must be at least 2");
  if (train_instances > instances_per_category) {
    throw ConfigError("train_instances exceeds instances_per_category");
  }
  std::set<std::size_t> seen;
  for (const auto* split : {&train_categories, &val_categories, &test_categories}) {
    for (auto id : *split) {
      if (id >= n_categories) throw ConfigError("category id " + std::to_string(id) + " out of range");
      if (!seen.insert(id).second) {
        throw ConfigError("category " + std::to_string(id) + " appears in more than one split");
      }
    }
  }
  if (dim == 0 || dim % 4) throw ConfigError("dim must be a positive multiple of 4");
  if (patch == 0) throw ConfigError("patch must be positive");
  if (decoder_layers == 0) throw ConfigError("decoder_layers must be at least 1");
  if (hidden_mult == 0) throw ConfigError("hidden_mult must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw ConfigError("noise_rate must lie in [0,1]");
}

}  // namespace textpose
