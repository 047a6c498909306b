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

#include <cmath>
#include <sstream>

#include "textpose.hpp"

using namespace textpose;

namespace {

double pck_oracle(const std::vector<double>& p, const std::vector<double>& g, const BBox& b, double tau) {
  const double r = tau * std::max(b.w, b.h);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < p.size() / 2; ++i) {
    const double dx = p[2 * i] - g[2 * i], dy = p[2 * i + 1] - g[2 * i + 1];
    hit += std::sqrt(dx * dx + dy * dy) <= r;
  }
  return static_cast<double>(hit) / static_cast<double>(p.size() / 2);
}

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.dim = 8;
  c.n_categories = 4;
  c.instances_per_category = 3;
  c.train_categories = {0, 1};
  c.val_categories = {2};
  c.test_categories = {3};
  return c;
}

}  // namespace

TEST(Pck, PerfectPredictionScoresOne) {
  Tensor kp = Tensor::matrix({{0.2, 0.3}, {0.6, 0.7}});
  EXPECT_EQ(pck(kp, kp, {0.1, 0.2, 0.6, 0.6}, 0.05), 1.0);
}

TEST(Pck, OneOfTwoJointsJustOutside) {
  BBox box{0.0, 0.0, 0.5, 0.25};
  Tensor gt = Tensor::matrix({{0.2, 0.2}, {0.4, 0.1}});
  Tensor pred = Tensor::matrix({{0.2, 0.2}, {0.4 + 0.21 * 0.5, 0.1}});
  EXPECT_EQ(pck(pred, gt, box, 0.2), 0.5);
}

TEST(Pck, BoundaryIsInclusive) {
  BBox box{0.0, 0.0, 0.5, 0.5};
  Tensor gt = Tensor::matrix({{0.25, 0.25}});
  // 0.125 = 0.25 · 0.5 exactly in binary.
  EXPECT_EQ(pck(Tensor::matrix({{0.375, 0.25}}), gt, box, 0.25), 1.0);
  EXPECT_EQ(pck(Tensor::matrix({{0.375 + 1e-12, 0.25}}), gt, box, 0.25), 0.0);
}

TEST(Pck, MatchesBruteForceAndIsMonotoneInThreshold) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(8);
    std::vector<double> p(2 * n), g(2 * n);
    for (double& v : p) v = rng.uniform();
    for (double& v : g) v = rng.uniform();
    BBox box{0, 0, rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)};
    Tensor pt = Tensor::from({n, 2}, p), gtt = Tensor::from({n, 2}, g);
    double last = 0.0;
    for (double tau : {0.05, 0.1, 0.2, 0.4, 0.8}) {
      const double v = pck(pt, gtt, box, tau);
      EXPECT_EQ(v, pck_oracle(p, g, box, tau));
      EXPECT_GE(v, last);
      last = v;
    }
  }
}

TEST(Pck, RejectsBadArguments) {
  Tensor kp = Tensor::matrix({{0.2, 0.3}});
  EXPECT_THROW(pck(kp, kp, {0, 0, 1, 1}, 0.0), InputError);
  EXPECT_THROW(pck(kp, Tensor::matrix({{0.2, 0.3}, {0.1, 0.1}}), {0, 0, 1, 1}, 0.2), DimensionError);
}

TEST(Evaluate, EmptyThresholdsGiveLossOnlyRow) {
  ExperimentConfig cfg = tiny_config();
  Dataset d = synth_dataset(cfg);
  Model m = Model::create(cfg);
  MetricsRow row = evaluate(m, select_split(d, cfg, Split::train), {}, "train");
  EXPECT_TRUE(row.pck.empty());
  EXPECT_FALSE(row.mean_pck().has_value());
  EXPECT_GT(row.total_loss, 0.0);
  EXPECT_EQ(csv_header({}), "config,split,samples,mean_pck,heatmap_loss,offset_loss,total_loss,alpha_mean,beta_mean");
  std::string line = csv_row(row);
  EXPECT_NE(line.find("full,train,2,,"), std::string::npos);
}

TEST(Evaluate, DeterministicRowBytes) {
  ExperimentConfig cfg = tiny_config();
  Dataset d = synth_dataset(cfg);
  Model m = Model::create(cfg);
  auto samples = select_split(d, cfg, Split::all);
  std::ostringstream a, b;
  write_csv(a, {evaluate(m, samples, default_pck_thresholds(), "all")});
  write_csv(b, {evaluate(m, samples, default_pck_thresholds(), "all")});
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str().find("pck@0.2,"), std::string::npos);
}

TEST(Evaluate, UntrainedModelNearChance) {
  ExperimentConfig cfg = tiny_config();
  cfg.n_categories = 8;
  cfg.instances_per_category = 4;
  cfg.train_categories = {0, 1, 2, 3, 4, 5};
  cfg.val_categories = {6};
  cfg.test_categories = {7};
  Dataset d = synth_dataset(cfg);
  auto samples = select_split(d, cfg, Split::all);
  const std::vector<double> tau{0.2};
  const double chance = chance_pck(samples, tau, 200, 5)[0];
  const double model = evaluate(Model::create(cfg), samples, tau, "all").pck[0];
  EXPECT_GT(chance, 0.0);
  EXPECT_LT(chance, 0.3);
  // Untrained predictions carry no keypoint information; allow sampling slack only.
  constexpr double kSlack = 0.1;
  EXPECT_LE(std::abs(model - chance), kSlack);
}

TEST(Evaluate, ChanceBaselineMatchesAreaForPointInCentre) {
  // A single keypoint at the centre with a unit box: the τ-disc lies inside the
  // square, so the hit probability is π τ².
  SceneSample s;
  s.keypoints = Tensor::matrix({{0.5, 0.5}});
  s.bbox = {0, 0, 1, 1};
  const double p = chance_pck({&s}, {0.2}, 200000, 9)[0];
  EXPECT_NEAR(p, M_PI * 0.04, 0.005);
}
