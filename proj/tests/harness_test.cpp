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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "textpose.hpp"

using namespace textpose;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.dim = 8;
  c.n_categories = 4;
  c.instances_per_category = 2;
  c.train_categories = {0, 1};
  c.val_categories = {2};
  c.test_categories = {3};
  c.steps = 4;
  c.batch_size = 2;
  c.lr = 1e-2;
  return c;
}

std::vector<double> flat(const ParamStore& s) {
  std::vector<double> out;
  for (const auto& [_, t] : s) out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1] ? 1u : 0u)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

TEST(Config, TextRoundTrip) {
  ExperimentConfig c = tiny_config();
  c.flags.use_learnable_weights = false;
  c.heatmap_norm = HeatmapNorm::l1;
  c.noise_kind = NoiseKind::typo;
  c.noise_rate = 0.25;
  c.lr = 3e-3;
  EXPECT_EQ(ExperimentConfig::parse(c.to_text()).to_text(), c.to_text());
}

TEST(Config, CommentsAndWhitespace) {
  ExperimentConfig c = ExperimentConfig::parse("# experiment\n  dim = 16  # width\n\nsteps=3\n");
  EXPECT_EQ(c.dim, 16u);
  EXPECT_EQ(c.steps, 3u);
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(ExperimentConfig::parse("dimension=8\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("dim\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("dim=-8\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("dim=10\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("lr=fast\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("use_hcmi=maybe\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("val_categories=0\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("test_categories=40\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("noise_rate=1.5\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::load("/nonexistent/textpose.cfg"), ConfigError);
}

TEST(Model, ParameterNamesFollowModulePaths) {
  ExperimentConfig c = tiny_config();
  Model full = Model::create(c);
  for (const auto& name : full.params().names()) {
    const bool known = name.starts_with("backbone.") || name.starts_with("encoder.") ||
                       name.starts_with("hcmi.") || name.starts_with("dsfr.") || name.starts_with("decoder.");
    EXPECT_TRUE(known) << name;
  }
  EXPECT_TRUE(full.params().contains("dsfr.gate_img.w"));
  EXPECT_TRUE(full.params().contains("decoder.2.loc.w"));

  c.flags.use_hcmi = false;
  c.flags.use_learnable_weights = false;
  Model ablated = Model::create(c);
  for (const auto& name : ablated.params().names()) {
    EXPECT_FALSE(name.starts_with("hcmi.")) << name;
    EXPECT_FALSE(name.starts_with("dsfr.gate")) << name;
  }
}

TEST(Model, ForwardShapes) {
  ExperimentConfig c = tiny_config();
  Dataset d = synth_dataset(c);
  Model m = Model::create(c);
  const SceneSample& s = d.samples[0];
  Prediction p = m.forward(s.image, m.embed(s.prompts, s.image), s.skeleton);
  const std::size_t n = s.keypoints.rows(), g = 64 / c.patch;
  EXPECT_EQ(p.heatmaps.shape(), (Shape{n, g, g}));
  EXPECT_EQ(p.coords.shape(), (Shape{n, 2}));
  EXPECT_EQ(p.locations.size(), c.decoder_layers);
  EXPECT_EQ(p.alpha.shape(), (Shape{n, 1}));
}

TEST(Model, RefinementIsIdentityAtInit) {
  ExperimentConfig c = tiny_config();
  Dataset d = synth_dataset(c);
  Model m = Model::create(c);
  const SceneSample& s = d.samples[1];
  EmbeddingBundle b = m.embed(s.prompts, s.image);
  Prediction p = m.forward(s.image, b, s.skeleton);
  EXPECT_TRUE(std::equal(p.joint.data().begin(), p.joint.data().end(), b.joint.data().begin(), b.joint.data().end()));
}

TEST(Model, FromParamsRejectsMismatchedConfig) {
  ExperimentConfig c = tiny_config();
  Model m = Model::create(c);
  ExperimentConfig wider = c;
  wider.dim = 16;
  EXPECT_THROW(Model::from_params(wider, m.params()), ConfigError);
  ExperimentConfig deeper = c;
  deeper.decoder_layers = 4;
  EXPECT_THROW(Model::from_params(deeper, m.params()), ConfigError);
}

TEST(Train, ZeroStepsReturnsInitialization) {
  ExperimentConfig c = tiny_config();
  c.steps = 0;
  Dataset d = synth_dataset(c);
  TrainResult r = train(c, select_split(d, c, Split::train));
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(r.optim.step, 0u);
  EXPECT_EQ(flat(r.model.params()), flat(Model::create(c).params()));
}

TEST(Train, SameSeedIsBitReproducible) {
  ExperimentConfig c = tiny_config();
  Dataset d = synth_dataset(c);
  auto samples = select_split(d, c, Split::train);
  TrainResult a = train(c, samples), b = train(c, samples);
  ASSERT_EQ(a.history.size(), c.steps);
  EXPECT_EQ(train_history_csv(a.history), train_history_csv(b.history));
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].total, b.history[i].total);
  EXPECT_EQ(flat(a.model.params()), flat(b.model.params()));
  EXPECT_NE(flat(a.model.params()), flat(Model::create(c).params()));
}

TEST(Train, HistoryRecordsWeightedTotal) {
  ExperimentConfig c = tiny_config();
  Dataset d = synth_dataset(c);
  TrainResult r = train(c, select_split(d, c, Split::train));
  for (const auto& h : r.history) EXPECT_NEAR(h.total, 2.0 * h.heatmap + h.offset, 1e-12);
  EXPECT_THROW(train(c, {}), InputError);
}

TEST(Checkpoint, RoundTripPreservesEverything) {
  ExperimentConfig c = tiny_config();
  Dataset d = synth_dataset(c);
  TrainResult r = train(c, select_split(d, c, Split::train));
  const auto path = std::filesystem::temp_directory_path() / "textpose_ckpt_test.bin";
  save_checkpoint(path.string(), c, r.model.params(), r.optim);
  Checkpoint ck = load_checkpoint(path.string());
  EXPECT_EQ(ck.config.to_text(), c.to_text());
  EXPECT_EQ(ck.params.names(), r.model.params().names());
  EXPECT_EQ(flat(ck.params), flat(r.model.params()));
  EXPECT_EQ(ck.optim.step, r.optim.step);
  EXPECT_EQ(ck.optim.m, r.optim.m);
  EXPECT_EQ(ck.optim.v, r.optim.v);

  Model m = load_model(path.string());
  auto samples = select_split(d, c, Split::all);
  EXPECT_EQ(csv_row(evaluate(m, samples, {0.2}, "all")), csv_row(evaluate(r.model, samples, {0.2}, "all")));
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptFilesRejected) {
  const auto path = std::filesystem::temp_directory_path() / "textpose_bad_ckpt.bin";
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOTACKPT-and-some-bytes";
  }
  EXPECT_THROW(load_checkpoint(path.string()), CheckpointError);
  ExperimentConfig c = tiny_config();
  save_checkpoint(path.string(), c, Model::create(c).params(), {});
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
  EXPECT_THROW(load_checkpoint(path.string()), CheckpointError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path.string()), CheckpointError);
}

TEST(Ablation, VariantsToggleOneModuleEach) {
  ExperimentConfig base = tiny_config();
  EXPECT_FALSE(ablation_variant(base, "no-hcmi").flags.use_hcmi);
  EXPECT_FALSE(ablation_variant(base, "no-dsfr").flags.use_dsfr);
  EXPECT_FALSE(ablation_variant(base, "no-lw").flags.use_learnable_weights);
  const auto full = ablation_variant(base, "full").flags;
  EXPECT_TRUE(full.use_hcmi && full.use_dsfr && full.use_learnable_weights);
  EXPECT_THROW(ablation_variant(base, "no-decoder"), ConfigError);
}

TEST(Ablation, RunsAllFourVariants) {
  ExperimentConfig c = tiny_config();
  c.steps = 2;
  Dataset d = synth_dataset(c);
  auto runs = run_ablation(c, d);
  ASSERT_EQ(runs.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(runs[i].row.config, ablation_labels()[i]);
    EXPECT_EQ(runs[i].row.split, "holdout");
    EXPECT_EQ(runs[i].row.samples, 2u);
  }
  EXPECT_FALSE(runs[2].row.alpha_mean.has_value());
  EXPECT_FALSE(runs[3].row.alpha_mean.has_value());
}

TEST(NoiseSuite, ClassSubstitutionAtFullRateChangesEveryClassEmbedding) {
  ExperimentConfig c = tiny_config();
  Dataset d = synth_dataset(c);
  Model m = Model::create(c);
  auto samples = select_split(d, c, Split::all);
  auto r = run_noise_suite(m, d, samples, NoiseKind::class_substitute, 1.0, 3, "all");
  ASSERT_EQ(r.class_changed.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_TRUE(r.class_changed[i]);
    EXPECT_NE(r.perturbed[i].category, samples[i]->prompts.category);
    EXPECT_EQ(r.perturbed[i].keypoints, samples[i]->prompts.keypoints);
  }
}

TEST(NoiseSuite, TyposAtFullRateTouchEveryKeypoint) {
  ExperimentConfig c = tiny_config();
  Dataset d = synth_dataset(c);
  Model m = Model::create(c);
  auto samples = select_split(d, c, Split::all);
  auto r = run_noise_suite(m, d, samples, NoiseKind::typo, 1.0, 3, "all");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& clean = samples[i]->prompts.keypoints;
    EXPECT_EQ(r.joints_changed[i], clean.size());
    EXPECT_FALSE(r.class_changed[i]);
    for (std::size_t k = 0; k < clean.size(); ++k) {
      const auto dist = edit_distance(r.perturbed[i].keypoints[k], clean[k]);
      EXPECT_GE(dist, 1u);
      EXPECT_LE(dist, 2u);
    }
  }
}

TEST(NoiseSuite, ZeroRateMatchesCleanEvaluation) {
  ExperimentConfig c = tiny_config();
  Dataset d = synth_dataset(c);
  Model m = Model::create(c);
  auto samples = select_split(d, c, Split::all);
  for (NoiseKind kind : {NoiseKind::class_substitute, NoiseKind::typo}) {
    auto r = run_noise_suite(m, d, samples, kind, 0.0, 3, "all");
    EXPECT_EQ(r.noisy.pck, r.clean.pck);
    EXPECT_EQ(r.noisy.total_loss, r.clean.total_loss);
    for (double v : r.delta.pck) EXPECT_EQ(v, 0.0);
  }
  EXPECT_THROW(run_noise_suite(m, d, samples, NoiseKind::typo, 1.5, 3, "all"), InputError);
}
