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
#include <utility>
#include <vector>

#include "textpose/config.hpp"
#include "textpose/dsfr.hpp"
#include "textpose/encoders.hpp"
#include "textpose/hcmi.hpp"
#include "textpose/matcher.hpp"

namespace textpose {

struct Prediction {
  std::vector<Tensor> locations;  // per decoder layer, N×2
  Tensor heatmaps;                // N×h×w logits
  Tensor coords;                  // N×2 decoded keypoints (no graph)
  Tensor joint;                   // refined joint embedding N×C
  Tensor alpha, beta;             // N×1 gate scores when present
};

/// Backbone → encoder → joint-embedding refinement → proposals → graph
/// decoder → decode. Parameters live in a ParamStore; the typed views below
/// alias the same tensors.
class Model {
 public:
  static Model create(const ExperimentConfig& cfg) {
    Model m;
    m.cfg_ = cfg;
    Rng rng(Rng::derive(cfg.seed, "model-init"));
    const std::size_t c = cfg.dim, hidden = cfg.hidden_mult * cfg.dim;
    m.backbone_ = BackboneParams::create(m.store_, "backbone", cfg.patch, c, cfg.mix_layers, rng);
    m.encoder_ = create_encoder(m.store_, "encoder", c, hidden, cfg.encoder_layers, rng);
    if (cfg.flags.use_hcmi) m.hcmi_ = HcmiParams::create(m.store_, "hcmi", c, hidden, rng);
    m.dsfr_ = DsfrParams::create(m.store_, "dsfr", c, hidden, cfg.flags, rng);
    m.decoder_ = create_decoder(m.store_, "decoder", c, hidden, cfg.decoder_layers, rng);
    return m;
  }

  /// Rebinds a model around existing parameters (e.g. from a checkpoint).
  static Model from_params(const ExperimentConfig& cfg, ParamStore store) {
    Model m;
    m.cfg_ = cfg;
    m.store_ = std::move(store);
    try {
      m.backbone_ = BackboneParams::bind(m.store_, "backbone", cfg.mix_layers);
      m.encoder_ = bind_encoder(m.store_, "encoder", cfg.encoder_layers);
      if (cfg.flags.use_hcmi) m.hcmi_ = HcmiParams::bind(m.store_, "hcmi");
      m.dsfr_ = DsfrParams::bind(m.store_, "dsfr", cfg.flags);
      m.decoder_ = bind_decoder(m.store_, "decoder", cfg.decoder_layers);
    } catch (const ContractError& e) {
      throw ConfigError(std::string("parameters do not match configuration: ") + e.what());
    }
    if (m.backbone_.patch.w.rows() != cfg.patch * cfg.patch || m.backbone_.patch.w.cols() != cfg.dim) {
      throw ConfigError("parameters do not match configured dim/patch");
    }
    return m;
  }

  const ExperimentConfig& config() const { return cfg_; }
  const ParamStore& params() const { return store_; }
  EncoderDims encoder_dims() const { return {cfg_.dim, cfg_.image_tokens}; }

  EmbeddingBundle embed(const PromptSet& prompts, const Image& image) const {
    return build_bundle(prompts, image, encoder_dims());
  }

  FeatureMap features(const Image& image) const {
    return encoder_refine(backbone_features(image, cfg_.patch, backbone_), encoder_);
  }

  HcmiOutput refine_context(const EmbeddingBundle& bundle) const {
    if (!cfg_.flags.use_hcmi) return {bundle.image, bundle.cls};
    return hcmi_forward(bundle.image, bundle.cls, hcmi_, cfg_.hcmi_residual);
  }

  DsfrOutput refine_joints(const EmbeddingBundle& bundle) const {
    HcmiOutput ctx = refine_context(bundle);
    return dsfr_forward(bundle.joint, ctx.image, ctx.cls, dsfr_, cfg_.flags,
                        {cfg_.dsfr_outer_residual});
  }

  Prediction forward(const Image& image, const EmbeddingBundle& bundle,
                     const Skeleton& skeleton) const {
    const FeatureMap feat = features(image);
    DsfrOutput refined = refine_joints(bundle);
    Prediction p;
    p.joint = refined.joint;
    p.alpha = refined.alpha;
    p.beta = refined.beta;
    const std::size_t n = bundle.joint.rows();
    p.heatmaps = reshape(proposal_heatmaps(feat, refined.joint), {n, feat.h, feat.w});
    p.locations = graph_decoder(refined.joint, feat, skeleton, decoder_).locations;
    p.coords = decode_keypoints(p.heatmaps.detach(),
                                offsets_toward(p.locations.back().detach(), feat.h, feat.w,
                                               cfg_.offset_radius));
    return p;
  }

 private:
  ExperimentConfig cfg_;
  ParamStore store_;
  BackboneParams backbone_;
  std::vector<EncoderLayerParams> encoder_;
  HcmiParams hcmi_;
  DsfrParams dsfr_;
  std::vector<DecoderLayerParams> decoder_;
};

}  // namespace textpose
