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

#include <optional>
#include <string>

#include "textpose/layers.hpp"

namespace textpose {

/// Module switches used by the ablation runner.
struct AblationFlags {
  bool use_hcmi = true;
  bool use_dsfr = true;
  bool use_learnable_weights = true;

  bool operator==(const AblationFlags&) const = default;
};

/// Refinement of joint embeddings from the image and class streams. When
/// `use_dsfr` is false only `bypass_*` are populated; when learnable weights
/// are off the gate layers are absent.
struct DsfrParams {
  AttentionParams img_attn, cls_attn;
  MlpParams img_mlp, cls_mlp;
  std::optional<LinearParams> gate_img, gate_cls;  // C→1
  MlpParams fuse;                                  // last layer zero-initialized
  LinearParams bypass_img, bypass_cls;

  static DsfrParams create(ParamStore& store, const std::string& prefix, std::size_t dim,
                           std::size_t hidden, const AblationFlags& flags, Rng& rng) {
    DsfrParams p;
    if (!flags.use_dsfr) {
      p.bypass_img = LinearParams::create(store, prefix + ".bypass_img", dim, dim, rng);
      p.bypass_cls = LinearParams::create(store, prefix + ".bypass_cls", dim, dim, rng);
      return p;
    }
    p.img_attn = AttentionParams::create(store, prefix + ".img.attn", dim, rng);
    p.img_mlp = MlpParams::create(store, prefix + ".img.mlp", dim, hidden, rng);
    p.cls_attn = AttentionParams::create(store, prefix + ".cls.attn", dim, rng);
    p.cls_mlp = MlpParams::create(store, prefix + ".cls.mlp", dim, hidden, rng);
    if (flags.use_learnable_weights) {
      p.gate_img = LinearParams::create(store, prefix + ".gate_img", dim, 1, rng);
      p.gate_cls = LinearParams::create(store, prefix + ".gate_cls", dim, 1, rng);
    }
    p.fuse = MlpParams::create(store, prefix + ".fuse", dim, hidden, rng, /*zero_output=*/true);
    return p;
  }

  static DsfrParams bind(const ParamStore& store, const std::string& prefix,
                         const AblationFlags& flags) {
    DsfrParams p;
    if (!flags.use_dsfr) {
      p.bypass_img = LinearParams::bind(store, prefix + ".bypass_img");
      p.bypass_cls = LinearParams::bind(store, prefix + ".bypass_cls");
      return p;
    }
    p.img_attn = AttentionParams::bind(store, prefix + ".img.attn");
    p.img_mlp = MlpParams::bind(store, prefix + ".img.mlp");
    p.cls_attn = AttentionParams::bind(store, prefix + ".cls.attn");
    p.cls_mlp = MlpParams::bind(store, prefix + ".cls.mlp");
    if (flags.use_learnable_weights) {
      p.gate_img = LinearParams::bind(store, prefix + ".gate_img");
      p.gate_cls = LinearParams::bind(store, prefix + ".gate_cls");
    }
    p.fuse = MlpParams::bind(store, prefix + ".fuse");
    return p;
  }
};

/// Per-joint score sigmoid(e·w + b), N×1, each strictly inside (0, 1).
inline Tensor gate_scores(const Tensor& e, const LinearParams& gate) {
  if (gate.w.rank() != 2 || gate.w.cols() != 1) {
    throw DimensionError("gate_scores: gate layer must map to a single output");
  }
  return sigmoid(linear(e, gate));
}

struct DsfrOutput {
  Tensor joint;  // N×C refined joint embedding
  Tensor alpha;  // N×1 image-stream gate; undefined when not computed
  Tensor beta;   // N×1 class-stream gate
};

struct DsfrOptions {
  bool outer_residual = true;
};

/// e_joint + MLP(α ⊙ MLP(CrossAttn(e_joint, image)) + β ⊙ MLP(CrossAttn(e_joint, cls)) + e_joint).
/// Without learnable weights α = β = 1. Without the refinement block at all,
/// returns e_joint + relu(lin(mean(image))) + relu(lin(cls)).
inline DsfrOutput dsfr_forward(const Tensor& joint, const Tensor& image, const Tensor& cls,
                               const DsfrParams& p, const AblationFlags& flags,
                               DsfrOptions opts = {}) {
  if (joint.rank() != 2 || image.rank() != 2 || cls.rank() != 2 || joint.cols() != image.cols() ||
      joint.cols() != cls.cols()) {
    throw DimensionError("dsfr: joint " + to_string(joint.shape()) + ", image " +
                         to_string(image.shape()) + ", class " + to_string(cls.shape()) +
                         " widths differ");
  }
  if (!flags.use_dsfr) {
    Tensor img = relu(linear(mean_rows(image), p.bypass_img));
    Tensor cl = relu(linear(cls, p.bypass_cls));
    return {add(add(joint, img), cl), {}, {}};
  }

  Tensor joint_img = mlp(cross_attention(joint, image, p.img_attn), p.img_mlp);
  Tensor joint_cls = mlp(cross_attention(joint, cls, p.cls_attn), p.cls_mlp);

  DsfrOutput out;
  Tensor fused;
  if (flags.use_learnable_weights) {
    out.alpha = gate_scores(joint_img, *p.gate_img);
    out.beta = gate_scores(joint_cls, *p.gate_cls);
    fused = add(add(hadamard(out.alpha, joint_img), hadamard(out.beta, joint_cls)), joint);
  } else {
    fused = add(add(joint_img, joint_cls), joint);
  }
  Tensor refined = mlp(fused, p.fuse);
  out.joint = opts.outer_residual ? add(joint, refined) : refined;
  return out;
}

}  // namespace textpose
