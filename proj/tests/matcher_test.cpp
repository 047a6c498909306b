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

#include "textpose.hpp"

using namespace textpose;

namespace {

Tensor random(Rng& rng, std::size_t r, std::size_t c) { return Tensor::from({r, c}, rng.normals(r * c)); }

// Exhaustive scan keeping the first strict maximum, then the offset at that cell.
std::vector<double> decode_oracle(const std::vector<double>& hm, const std::vector<double>& off, std::size_t n,
                                  std::size_t h, std::size_t w) {
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t by = 0, bx = 0;
    double best = hm[i * h * w];
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        if (hm[(i * h + y) * w + x] > best) {
          best = hm[(i * h + y) * w + x];
          by = y;
          bx = x;
        }
    const double ox = off[((i * h + by) * w + bx) * 2], oy = off[((i * h + by) * w + bx) * 2 + 1];
    out.push_back(std::clamp((static_cast<double>(bx) + 0.5 + ox) / static_cast<double>(w), 0.0, 1.0));
    out.push_back(std::clamp((static_cast<double>(by) + 0.5 + oy) / static_cast<double>(h), 0.0, 1.0));
  }
  return out;
}

}  // namespace

TEST(Skeleton, ValidatesAndNormalizes) {
  EXPECT_THROW(Skeleton(3, {{0, 3}}), InputError);
  EXPECT_THROW(Skeleton(3, {{1, 1}}), InputError);
  EXPECT_THROW(Skeleton::from_adjacency(2, {0, 1, 0, 0}), InputError);
  EXPECT_THROW(Skeleton::from_adjacency(2, {1, 0, 0, 0}), InputError);

  Skeleton path(3, {{0, 1}, {2, 1}, {1, 0}});
  EXPECT_EQ(path.edges().size(), 2u);
  EXPECT_EQ(Skeleton::from_adjacency(3, path.adjacency()), path);
  Tensor a = path.normalized_adjacency();
  EXPECT_NEAR(a.at(0, 1), 1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(a.at(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(a.at(0, 2), 0.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(a.at(i, j), a.at(j, i));
}

TEST(Backbone, PatchGridArithmetic) {
  Rng rng(1);
  ParamStore s;
  auto p = BackboneParams::create(s, "backbone", 8, 16, 2, rng);
  FeatureMap f = backbone_features(Image::blank(64, 64), 8, p);
  EXPECT_EQ(f.h, 8u);
  EXPECT_EQ(f.w, 8u);
  EXPECT_EQ(f.tokens.shape(), (Shape{64, 16}));
  EXPECT_THROW(patchify(Image::blank(60, 64), 8), InputError);
}

TEST(Backbone, ZeroImageAndBiasGiveZeroTokens) {
  Rng rng(2);
  ParamStore s;
  auto p = BackboneParams::create(s, "backbone", 4, 8, 2, rng);
  FeatureMap embedded = patch_embed(Image::blank(16, 16), 4, p.patch);
  FeatureMap mixed = backbone_features(Image::blank(16, 16), 4, p);
  for (double v : embedded.tokens.data()) EXPECT_EQ(v, 0.0);
  for (double v : mixed.tokens.data()) EXPECT_EQ(v, 0.0);
}

TEST(Backbone, PatchifyOrderIsRowMajor) {
  Image img = Image::blank(4, 4);
  for (std::size_t i = 0; i < 16; ++i) img.pixels[i] = static_cast<double>(i);
  Tensor p = patchify(img, 2);
  EXPECT_EQ(p.shape(), (Shape{4, 4}));
  EXPECT_EQ(std::vector<double>(p.data().begin(), p.data().begin() + 4), (std::vector<double>{0, 1, 4, 5}));
  EXPECT_EQ(p.at(3, 0), 10.0);
}

TEST(Backbone, NeighborMeanIsRowStochastic) {
  Tensor n = grid_neighbor_mean(3, 4);
  for (std::size_t r = 0; r < 12; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 12; ++c) total += n.at(r, c);
    EXPECT_NEAR(total, 1.0, 1e-15);
    EXPECT_EQ(n.at(r, r), 0.0);
  }
  EXPECT_EQ(n.at(0, 1), 0.5);
  EXPECT_EQ(n.at(5, 1), 0.25);
}

TEST(Encoder, EmptyStackAddsPositionsOnly) {
  Rng rng(3);
  FeatureMap f{random(rng, 6, 8), 2, 3};
  FeatureMap out = encoder_refine(f, {});
  Tensor pe = positional_encoding(2, 3, 8);
  for (std::size_t i = 0; i < f.tokens.size(); ++i) EXPECT_EQ(out.tokens[i], f.tokens[i] + pe[i]);
  EXPECT_THROW(positional_encoding(2, 3, 6), DimensionError);
}

TEST(Encoder, PositionalEncodingDistinguishesCells) {
  Tensor pe = positional_encoding(4, 4, 16);
  for (std::size_t a = 0; a < 16; ++a)
    for (std::size_t b = a + 1; b < 16; ++b) {
      double d = 0.0;
      for (std::size_t j = 0; j < 16; ++j) d += std::abs(pe.at(a, j) - pe.at(b, j));
      EXPECT_GT(d, 1e-3);
    }
}

TEST(Proposals, OrthogonalJointGivesZeroMap) {
  Rng rng(4);
  std::vector<double> t = rng.normals(9 * 4);
  for (std::size_t r = 0; r < 9; ++r) t[r * 4 + 3] = 0.0;
  FeatureMap f{Tensor::from({9, 4}, t), 3, 3};
  Tensor h = proposal_heatmaps(f, Tensor::matrix({{0, 0, 0, 2.5}}));
  for (double v : h.data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(proposal_heatmaps(f, Tensor::zeros({1, 5})), DimensionError);
}

TEST(Proposals, EntriesAreInnerProducts) {
  Rng rng(5);
  FeatureMap f{random(rng, 6, 4), 2, 3};
  Tensor j = random(rng, 2, 4);
  Tensor h = proposal_heatmaps(f, j);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t p = 0; p < 6; ++p) {
      double d = 0.0;
      for (std::size_t k = 0; k < 4; ++k) d += j.at(i, k) * f.tokens.at(p, k);
      EXPECT_NEAR(h.at(i, p), d, 1e-14);
    }
}

TEST(Decoder, EmitsOneLocationSetPerLayer) {
  Rng rng(6);
  ParamStore s;
  auto layers = create_decoder(s, "decoder", 8, 16, 3, rng);
  DecoderOutput d = graph_decoder(random(rng, 4, 8), {random(rng, 6, 8), 2, 3}, Skeleton(4, {{0, 1}}), layers);
  ASSERT_EQ(d.locations.size(), 3u);
  for (const auto& l : d.locations) {
    EXPECT_EQ(l.shape(), (Shape{4, 2}));
    for (double v : l.data()) EXPECT_TRUE(v > 0.0 && v < 1.0);
  }
  EXPECT_THROW(graph_decoder(random(rng, 3, 8), {random(rng, 6, 8), 2, 3}, Skeleton(4, {}), layers),
               DimensionError);
}

TEST(Decoder, EdgelessGraphReducesToSelfProjection) {
  Rng rng(7);
  ParamStore s;
  auto layers = create_decoder(s, "decoder", 6, 12, 1, rng);
  // Silence attention and MLP so only the graph step remains.
  layers[0].attn.wo.assign(std::vector<double>(36, 0.0));
  layers[0].mlp.out.w.assign(std::vector<double>(72, 0.0));
  Tensor x = random(rng, 3, 6);
  DecoderOutput d = graph_decoder(x, {random(rng, 4, 6), 2, 2}, Skeleton(3, {}), layers);
  Tensor expect = add(x, matmul(x, layers[0].graph));
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(d.nodes[i], expect[i], 1e-14);
  Tensor eye = Skeleton(3, {}).normalized_adjacency();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(eye.at(i, j), i == j ? 1.0 : 0.0);
}

TEST(Decode, SinglePeakWithZeroOffsetsGivesCellCentre) {
  std::vector<double> hm(4 * 5, 0.0);
  hm[2 * 5 + 3] = 1.0;
  Tensor p = decode_keypoints(Tensor::from({1, 4, 5}, hm), Tensor::zeros({1, 4, 5, 2}));
  EXPECT_DOUBLE_EQ(p[0], 3.5 / 5.0);
  EXPECT_DOUBLE_EQ(p[1], 2.5 / 4.0);
}

TEST(Decode, UniformMapPicksFirstCell) {
  Tensor p = decode_keypoints(Tensor::full({2, 3, 3}, 0.7), Tensor::zeros({2, 3, 3, 2}));
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_DOUBLE_EQ(p.at(i, 0), 0.5 / 3.0);
    EXPECT_DOUBLE_EQ(p.at(i, 1), 0.5 / 3.0);
  }
}

TEST(Decode, MatchesExhaustiveOracleIncludingTies) {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.index(4), h = 1 + rng.index(7), w = 1 + rng.index(7);
    std::vector<double> hm(n * h * w), off(n * h * w * 2);
    const bool ties = trial % 2 == 0;
    for (double& v : hm) v = ties ? static_cast<double>(rng.index(3)) : rng.normal();
    for (double& v : off) v = rng.uniform(-1.0, 1.0);
    Tensor p = decode_keypoints(Tensor::from({n, h, w}, hm), Tensor::from({n, h, w, 2}, off));
    auto expect = decode_oracle(hm, off, n, h, w);
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(p[i], expect[i]);
  }
}

TEST(Decode, ArgmaxInvariantUnderMonotoneTransforms) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> hm(3 * 5 * 6), off(3 * 5 * 6 * 2);
    for (double& v : hm) v = rng.normal();
    for (double& v : off) v = rng.uniform(-1.0, 1.0);
    std::vector<double> cubed = hm, squashed = hm;
    for (double& v : cubed) v = v * v * v + 2.0 * v;
    for (double& v : squashed) v = 1.0 / (1.0 + std::exp(-v));
    Tensor o = Tensor::from({3, 5, 6, 2}, off);
    Tensor a = decode_keypoints(Tensor::from({3, 5, 6}, hm), o);
    Tensor b = decode_keypoints(Tensor::from({3, 5, 6}, cubed), o);
    Tensor c = decode_keypoints(Tensor::from({3, 5, 6}, squashed), o);
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_EQ(a[i], b[i]);
      EXPECT_EQ(a[i], c[i]);
    }
  }
}

TEST(Decode, RejectsInconsistentShapes) {
  EXPECT_THROW(decode_keypoints(Tensor::zeros({1, 3, 3}), Tensor::zeros({1, 3, 4, 2})), DimensionError);
  EXPECT_THROW(decode_keypoints(Tensor::zeros({3, 3}), Tensor::zeros({1, 3, 3, 2})), DimensionError);
}

TEST(Offsets, PointTowardLocationWithinRadius) {
  Tensor loc = Tensor::matrix({{0.55, 0.3}});
  Tensor off = offsets_toward(loc, 4, 5, 1.0);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 5; ++x) {
      const double ox = off[((y * 5) + x) * 2], oy = off[((y * 5) + x) * 2 + 1];
      EXPECT_EQ(ox, std::clamp(0.55 * 5 - (x + 0.5), -1.0, 1.0));
      EXPECT_EQ(oy, std::clamp(0.3 * 4 - (y + 0.5), -1.0, 1.0));
    }
  // A peak next to the location decodes back onto it.
  std::vector<double> hm(20, 0.0);
  hm[1 * 5 + 2] = 1.0;
  Tensor p = decode_keypoints(Tensor::from({1, 4, 5}, hm), off);
  EXPECT_NEAR(p[0], 0.55, 1e-15);
  EXPECT_NEAR(p[1], 0.3, 1e-15);
}
