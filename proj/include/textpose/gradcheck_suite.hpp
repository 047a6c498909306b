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
#include <functional>
#include <string>
#include <vector>

#include "textpose/dsfr.hpp"
#include "textpose/grad_check.hpp"
#include "textpose/hcmi.hpp"
#include "textpose/losses.hpp"
#include "textpose/matcher.hpp"
#include "textpose/model.hpp"

namespace textpose {

struct ModuleGradCheck {
  std::string module;
  GradReport report;
  double seconds = 0.0;
};

namespace detail {

inline Tensor random_tensor(Rng& rng, Shape shape, double stddev = 1.0) {
  auto n = numel(shape);
  return Tensor::from(std::move(shape), rng.normals(n, stddev));
}

/// Scalar probe Σ out ⊙ R with a fixed random R, so every output direction
/// contributes to the checked gradient.
inline Tensor probe(const Tensor& out, std::uint64_t seed) {
  Rng rng(seed);
  return sum(hadamard(out, random_tensor(rng, out.shape())));
}

inline void randomize(const Tensor& t, Rng& rng, double stddev) { t.assign(rng.normals(t.size(), stddev)); }

inline Image random_image(std::size_t h, std::size_t w, Rng& rng) {
  Image img = Image::blank(h, w);
  for (double& v : img.pixels) v = rng.uniform();
  return img;
}

inline std::vector<std::pair<std::string, Tensor>> as_list(const ParamStore& s) {
  return {s.begin(), s.end()};
}

// Small configuration shared by the full-model check.
inline ExperimentConfig tiny_model_config() {
  ExperimentConfig c;
  c.seed = 11;
  c.dim = 8;
  c.image_tokens = 4;
  c.patch = 4;
  c.mix_layers = 2;
  c.encoder_layers = 2;
  c.decoder_layers = 3;
  c.hidden_mult = 2;
  return c;
}

}  // namespace detail

inline const std::vector<std::string>& gradcheck_modules() {
  static const std::vector<std::string> m{
      "ops",     "linear",   "self-attention", "hcmi",         "cross-attention", "gates", "dsfr",
      "backbone", "encoder", "decoder",        "heatmap-loss", "offset-loss",     "model"};
  return m;
}

/// Runs the finite-difference check for one named block on small random
/// inputs. Parameters not exercised at initialization (zero-initialized
/// output layers) are randomized first so every gradient path is live.
inline ModuleGradCheck run_gradcheck(const std::string& module, double tolerance = 1e-5,
                                     GradCheckOptions opts = {}) {
  using namespace detail;
  const auto start = std::chrono::steady_clock::now();
  Rng rng(Rng::derive(2024, module));
  ParamStore store;
  std::function<Tensor()> closure;
  const std::size_t c = 6, hidden = 12;

  if (module == "ops") {
    const Tensor& a = store.add_normal("a", {3, 4}, 1.0, rng);
    const Tensor& b = store.add_normal("b", {4, 5}, 1.0, rng);
    const Tensor& row = store.add_normal("row", {1, 5}, 1.0, rng);
    const Tensor& col = store.add_normal("col", {3, 1}, 1.0, rng);
    closure = [a, b, row, col] {
      Tensor x = add(matmul(a, b), row);
      Tensor y = softmax_rows(hadamard(col, x));
      Tensor z = concat_rows(sigmoid(x), slice_rows(y, 1, 2));
      Tensor t = add(matmul_nt(z, matmul(a, b)), matmul(transpose(b), transpose(a)));
      return add(add(probe(t, 1), probe(abs(sub(x, scale(y, 0.5))), 2)),
                 add(probe(mean_rows(square(x)), 3), probe(reshape(relu(x), {15}), 4)));
    };
  } else if (module == "linear") {
    LinearParams p = LinearParams::create(store, "linear", 4, 3, rng);
    randomize(p.b, rng, 0.5);
    Tensor x = random_tensor(rng, {5, 4});
    closure = [p, x] { return probe(linear(x, p), 5); };
  } else if (module == "self-attention") {
    AttentionParams p = AttentionParams::create(store, "attn", c, rng);
    Tensor x = random_tensor(rng, {4, c});
    closure = [p, x] { return probe(self_attention(x, p), 6); };
  } else if (module == "hcmi") {
    HcmiParams p = HcmiParams::create(store, "hcmi", c, hidden, rng);
    for (const auto& [_, t] : store) if (t.rank() == 2 && t.rows() == 1) randomize(t, rng, 0.3);
    Tensor img = random_tensor(rng, {3, c}), cls = random_tensor(rng, {1, c});
    closure = [p, img, cls] {
      HcmiOutput o = hcmi_forward(img, cls, p, true);
      HcmiOutput bare = hcmi_forward(img, cls, p, false);
      return add(add(probe(o.image, 7), probe(o.cls, 8)), probe(concat_rows(bare.image, bare.cls), 9));
    };
  } else if (module == "cross-attention") {
    AttentionParams p = AttentionParams::create(store, "attn", c, rng);
    Tensor q = random_tensor(rng, {3, c}), kv = random_tensor(rng, {4, c});
    closure = [p, q, kv] { return probe(cross_attention(q, kv, p), 10); };
  } else if (module == "gates") {
    LinearParams g = LinearParams::create(store, "gate", c, 1, rng);
    randomize(g.b, rng, 0.5);
    Tensor e = random_tensor(rng, {5, c});
    closure = [g, e] { return probe(gate_scores(e, g), 11); };
  } else if (module == "dsfr") {
    AblationFlags flags;
    DsfrParams p = DsfrParams::create(store, "dsfr", c, hidden, flags, rng);
    randomize(p.fuse.out.w, rng, 0.3);
    for (const auto& [_, t] : store) if (t.rank() == 2 && t.rows() == 1) randomize(t, rng, 0.3);
    Tensor joint = random_tensor(rng, {3, c}), img = random_tensor(rng, {4, c}),
           cls = random_tensor(rng, {1, c});
    closure = [p, joint, img, cls, flags] {
      return probe(dsfr_forward(joint, img, cls, p, flags).joint, 12);
    };
  } else if (module == "backbone") {
    BackboneParams p = BackboneParams::create(store, "backbone", 4, c, 2, rng);
    for (const auto& [_, t] : store) if (t.rank() == 2 && t.rows() == 1) randomize(t, rng, 0.3);
    Image img = random_image(12, 12, rng);
    closure = [p, img] { return probe(backbone_features(img, 4, p).tokens, 13); };
  } else if (module == "encoder") {
    auto layers = create_encoder(store, "encoder", 8, 16, 2, rng);
    for (const auto& [_, t] : store) if (t.rank() == 2 && t.rows() == 1) randomize(t, rng, 0.3);
    FeatureMap f{random_tensor(rng, {9, 8}), 3, 3};
    closure = [layers, f] { return probe(encoder_refine(f, layers).tokens, 14); };
  } else if (module == "decoder") {
    auto layers = create_decoder(store, "decoder", c, hidden, 3, rng);
    for (const auto& [_, t] : store) if (t.rank() == 2 && t.rows() == 1) randomize(t, rng, 0.3);
    const Tensor& joint = store.add_normal("input.joint", {4, c}, 1.0, rng);
    FeatureMap f{store.add_normal("input.feat", {6, c}, 1.0, rng), 2, 3};
    Skeleton sk(4, {{0, 1}, {1, 2}, {1, 3}});
    closure = [layers, joint, f, sk] {
      DecoderOutput d = graph_decoder(joint, f, sk, layers);
      Tensor total = probe(d.nodes, 15);
      for (std::size_t l = 0; l < d.locations.size(); ++l) total = add(total, probe(d.locations[l], 16 + l));
      return total;
    };
  } else if (module == "heatmap-loss") {
    const Tensor& logits = store.add_normal("logits", {3, 4, 5}, 1.5, rng);
    Tensor target = gaussian_target(Tensor::from({3, 2}, {0.2, 0.3, 0.7, 0.5, 0.45, 0.9}), 4, 5, 1.5);
    closure = [logits, target] {
      return add(heatmap_loss(logits, target, HeatmapNorm::l2),
                 heatmap_loss(logits, target, HeatmapNorm::l1));
    };
  } else if (module == "offset-loss") {
    std::vector<Tensor> layers;
    for (int l = 0; l < 3; ++l)
      layers.push_back(store.add("layer" + std::to_string(l), {4, 2}, [&] {
        std::vector<double> v(8);
        for (double& x : v) x = rng.uniform(0.05, 0.95);
        return v;
      }()));
    Tensor target = Tensor::from({4, 2}, {0.5, 0.5, 0.1, 0.9, 0.33, 0.66, 0.8, 0.2});
    closure = [layers, target] { return offset_loss(layers, target); };
  } else if (module == "model") {
    ExperimentConfig cfg = tiny_model_config();
    Model m = Model::create(cfg);
    for (const auto& [name, t] : m.params()) {
      if (name.starts_with("dsfr.fuse.fc2")) randomize(t, rng, 0.3);
      else if (t.rank() == 2 && t.rows() == 1) randomize(t, rng, 0.1);
    }
    Image img = random_image(16, 16, rng);
    PromptSet prompts{"kettle", {"spout", "handle", "lid"}};
    EmbeddingBundle bundle = m.embed(prompts, img);
    Skeleton sk(3, {{0, 1}, {1, 2}});
    Tensor kp = Tensor::from({3, 2}, {0.2, 0.3, 0.6, 0.55, 0.8, 0.15});
    Tensor target = gaussian_target(kp, 4, 4, cfg.sigma);
    closure = [m, img, bundle, sk, kp, target] {
      Prediction p = m.forward(img, bundle, sk);
      return total_loss(heatmap_loss(p.heatmaps, target), offset_loss(p.locations, kp)).graph;
    };
    ModuleGradCheck out{module, grad_check(closure, as_list(m.params()), tolerance, opts), 0.0};
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  } else {
    throw InputError("unknown gradcheck module: " + module);
  }

  ModuleGradCheck out{module, grad_check(closure, as_list(store), tolerance, opts), 0.0};
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace textpose
