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
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "textpose/rng.hpp"
#include "textpose/tensor.hpp"

namespace textpose {

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Grayscale image, row-major, intensities in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  static Image blank(std::size_t h, std::size_t w) { return {h, w, std::vector<double>(h * w, 0.0)}; }
  double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  double& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  bool operator==(const Image&) const = default;
};

/// Category description plus one description per keypoint; the order of
/// `keypoints` defines the joint index.
struct PromptSet {
  std::string category;
  std::vector<std::string> keypoints;

  bool operator==(const PromptSet&) const = default;
};

struct EmbeddingBundle {
  Tensor joint;  // N×C
  Tensor cls;    // 1×C
  Tensor image;  // M×C
};

struct EncoderDims {
  std::size_t dim = 64;
  std::size_t image_tokens = 4;
};

namespace detail {

inline void normalize_row(std::span<double> row) {
  double norm = 0.0;
  for (double v : row) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw NumericError("encoder: zero-norm embedding");
  for (double& v : row) v /= norm;
}

constexpr std::uint64_t kImageProjectionSeed = 0x7e57'90a1'd3c0'ffeeULL;
constexpr std::size_t kSubGrid = 4;
constexpr std::size_t kPatchStats = 5 + kSubGrid * kSubGrid;

// [1, mean, std, mean|dx|, mean|dy|, 4×4 sub-block means] for one patch.
inline std::vector<double> patch_stats(const Image& img, std::size_t y0, std::size_t x0,
                                       std::size_t ph, std::size_t pw) {
  std::vector<double> s(kPatchStats, 0.0);
  s[0] = 1.0;
  double total = 0.0, total_sq = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t y = 0; y < ph; ++y) {
    for (std::size_t x = 0; x < pw; ++x) {
      const double v = img.at(y0 + y, x0 + x);
      total += v;
      total_sq += v * v;
      if (x + 1 < pw) dx += std::abs(img.at(y0 + y, x0 + x + 1) - v);
      if (y + 1 < ph) dy += std::abs(img.at(y0 + y + 1, x0 + x) - v);
      s[5 + (y * kSubGrid / ph) * kSubGrid + (x * kSubGrid / pw)] += v;
    }
  }
  const double n = static_cast<double>(ph * pw);
  s[1] = total / n;
  s[2] = std::sqrt(std::max(0.0, total_sq / n - s[1] * s[1]));
  s[3] = dx / static_cast<double>(ph * (pw - 1));
  s[4] = dy / static_cast<double>((ph - 1) * pw);
  const double sub = n / static_cast<double>(kSubGrid * kSubGrid);
  for (std::size_t i = 5; i < kPatchStats; ++i) s[i] /= sub;
  return s;
}

}  // namespace detail

/// Pseudo text encoder: the prompt's stable hash seeds a standard-normal draw,
/// normalized to unit length. Returns 1×dim.
inline Tensor encode_text(std::string_view prompt, std::size_t dim) {
  if (prompt.empty()) throw InputError("encode_text: empty prompt");
  if (dim == 0) throw InputError("encode_text: zero dimension");
  Rng rng(stable_hash(prompt));
  std::vector<double> v = rng.normals(dim);
  detail::normalize_row(v);
  return Tensor::from({1, dim}, std::move(v));
}

/// Pseudo image encoder: per-patch statistics on a √M×√M grid, each pushed
/// through one fixed random projection and normalized. Returns M×dim.
inline Tensor encode_image_global(const Image& image, std::size_t dim, std::size_t tokens) {
  const auto grid = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(tokens))));
  if (tokens == 0 || grid * grid != tokens) {
    throw InputError("encode_image_global: token count must be a perfect square, got " +
                     std::to_string(tokens));
  }
  if (image.height % grid || image.width % grid) {
    throw InputError("encode_image_global: image extents not divisible by the patch grid");
  }
  const std::size_t ph = image.height / grid, pw = image.width / grid;
  if (ph < detail::kSubGrid || pw < detail::kSubGrid) {
    throw InputError("encode_image_global: patches smaller than 4×4 pixels");
  }
  Rng rng(Rng::derive(detail::kImageProjectionSeed, std::to_string(dim)));
  const std::vector<double> proj = rng.normals(detail::kPatchStats * dim);

  std::vector<double> out(tokens * dim, 0.0);
  for (std::size_t t = 0; t < tokens; ++t) {
    const auto stats = detail::patch_stats(image, (t / grid) * ph, (t % grid) * pw, ph, pw);
    std::span<double> row(&out[t * dim], dim);
    for (std::size_t k = 0; k < stats.size(); ++k) {
      for (std::size_t j = 0; j < dim; ++j) row[j] += stats[k] * proj[k * dim + j];
    }
    detail::normalize_row(row);
  }
  return Tensor::from({tokens, dim}, std::move(out));
}

enum class NoiseKind { none, typo, class_substitute };

inline NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "none") return NoiseKind::none;
  if (s == "typo") return NoiseKind::typo;
  if (s == "class" || s == "class-substitute") return NoiseKind::class_substitute;
  throw InputError("unknown noise kind: " + std::string(s));
}

/// Single-edit typo ("left eye" → "left eey", "nose" → "nosse"): one adjacent
/// transposition of two distinct characters, or one character duplication.
/// The result always differs from the input.
inline std::string typo(std::string_view prompt, std::uint64_t seed) {
  std::string s(prompt);
  if (s.empty()) return s;
  Rng rng(Rng::derive(seed, prompt));
  std::vector<std::size_t> swappable;
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    if (s[i] != s[i + 1]) swappable.push_back(i);
  if (!swappable.empty() && rng.uniform() < 0.5) {
    const std::size_t i = swappable[rng.index(swappable.size())];
    std::swap(s[i], s[i + 1]);
  } else {
    const std::size_t i = rng.index(s.size());
    s.insert(s.begin() + static_cast<std::ptrdiff_t>(i), s[i]);
  }
  return s;
}

/// Replaces `prompt` with another entry of `categories`; never returns `prompt`
/// itself unless no alternative exists.
inline std::string substitute_class(std::string_view prompt, std::uint64_t seed,
                                    const std::vector<std::string>& categories) {
  std::vector<const std::string*> others;
  for (const auto& c : categories)
    if (c != prompt) others.push_back(&c);
  if (others.empty()) throw InputError("substitute_class: no alternative category for '" +
                                       std::string(prompt) + "'");
  Rng rng(Rng::derive(seed, prompt));
  return *others[rng.index(others.size())];
}

inline std::string perturb_prompt(std::string_view prompt, NoiseKind kind, std::uint64_t seed,
                                  const std::vector<std::string>& categories = {}) {
  switch (kind) {
    case NoiseKind::none: return std::string(prompt);
    case NoiseKind::typo: return typo(prompt, seed);
    case NoiseKind::class_substitute: return substitute_class(prompt, seed, categories);
  }
  return std::string(prompt);
}

inline EmbeddingBundle build_bundle(const PromptSet& prompts, const Image& image, EncoderDims dims) {
  if (prompts.keypoints.empty()) throw InputError("build_bundle: prompt set has no keypoints");
  std::vector<double> joint;
  joint.reserve(prompts.keypoints.size() * dims.dim);
  for (const auto& kp : prompts.keypoints) {
    Tensor e = encode_text(kp, dims.dim);
    joint.insert(joint.end(), e.data().begin(), e.data().end());
  }
  return {Tensor::from({prompts.keypoints.size(), dims.dim}, std::move(joint)),
          encode_text(prompts.category, dims.dim),
          encode_image_global(image, dims.dim, dims.image_tokens)};
}

/// Sidecar format: first line is the category description, every following
/// non-empty line one keypoint description.
inline PromptSet read_prompt_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open prompt file: " + path);
  PromptSet ps;
  std::string line;
  if (!std::getline(in, ps.category) || ps.category.empty()) {
    throw InputError("prompt file has no category line: " + path);
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ps.keypoints.push_back(line);
  }
  if (ps.keypoints.empty()) throw InputError("prompt file lists no keypoints: " + path);
  return ps;
}

inline void write_prompt_file(const std::string& path, const PromptSet& ps) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write prompt file: " + path);
  out << ps.category << '\n';
  for (const auto& k : ps.keypoints) out << k << '\n';
}

}  // namespace textpose
