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
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "textpose/config.hpp"
#include "textpose/encoders.hpp"
#include "textpose/matcher.hpp"
#include "textpose/rng.hpp"

namespace textpose {

struct BBox {
  double x = 0, y = 0, w = 0, h = 0;  // normalized
  bool operator==(const BBox&) const = default;
};

enum class ShapeKind { polygon, star };

/// One synthetic object category: a fixed template in a unit frame.
struct Category {
  std::size_t id = 0;
  ShapeKind kind = ShapeKind::polygon;
  std::vector<std::array<double, 2>> points;  // template keypoints, max radius 1
  Skeleton skeleton;
  PromptSet prompts;
};

struct SceneSample {
  std::size_t index = 0;
  std::size_t category = 0;
  std::size_t instance = 0;
  Image image;
  Tensor keypoints;  // N×2 normalized (x, y)
  BBox bbox;
  Skeleton skeleton;
  PromptSet prompts;
};

struct Dataset {
  std::uint64_t seed = 0;
  std::size_t image_size = 64;
  std::vector<Category> categories;
  std::vector<SceneSample> samples;

  std::vector<std::string> category_names() const {
    std::vector<std::string> out;
    for (const auto& c : categories) out.push_back(c.prompts.category);
    return out;
  }
};

namespace detail {

inline const std::vector<std::string>& category_names() {
  static const std::vector<std::string> names{
      "cat", "chair", "dog", "table", "horse", "lamp", "bird", "sofa",
      "fish", "car", "cow", "bed", "fox", "bus", "deer", "kettle"};
  return names;
}

inline const std::vector<std::string>& keypoint_vocabulary() {
  static const std::vector<std::string> vocab{
      "head", "neck", "tail", "nose", "left eye", "right eye", "left ear", "right ear",
      "left front paw", "right front paw", "left hind paw", "right hind paw", "left leg",
      "right leg", "top", "bottom", "left side", "right side", "front", "back", "center"};
  return vocab;
}

inline Category make_category(std::size_t id, std::uint64_t seed) {
  Rng rng(Rng::derive(seed, "category-" + std::to_string(id)));
  Category c;
  c.id = id;
  c.kind = id % 2 == 0 ? ShapeKind::polygon : ShapeKind::star;
  const std::size_t variant = (id / 2) % 4;
  const double two_pi = 2.0 * 3.14159265358979323846;
  const double phase = rng.uniform(0.0, two_pi);

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  if (c.kind == ShapeKind::polygon) {
    const std::size_t n = 4 + variant;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = phase + two_pi * (static_cast<double>(j) + rng.uniform(-0.25, 0.25)) /
                                   static_cast<double>(n);
      const double r = rng.uniform(0.55, 1.0);
      c.points.push_back({r * std::cos(a), r * std::sin(a)});
      edges.emplace_back(j, (j + 1) % n);
    }
  } else {
    const std::size_t arms = 3 + variant;
    c.points.push_back({rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15)});
    for (std::size_t j = 0; j < arms; ++j) {
      const double a = phase + two_pi * (static_cast<double>(j) + rng.uniform(-0.2, 0.2)) /
                                   static_cast<double>(arms);
      const double r = rng.uniform(0.6, 1.0);
      c.points.push_back({r * std::cos(a), r * std::sin(a)});
      edges.emplace_back(0, j + 1);
    }
  }
  double rmax = 0.0;
  for (const auto& p : c.points) rmax = std::max(rmax, std::hypot(p[0], p[1]));
  for (auto& p : c.points) p = {p[0] / rmax, p[1] / rmax};
  c.skeleton = Skeleton(c.points.size(), std::move(edges));

  const auto& names = category_names();
  c.prompts.category = id < names.size() ? names[id] : "object " + std::to_string(id);
  std::vector<std::string> vocab = keypoint_vocabulary();
  for (std::size_t j = 0; j < c.points.size(); ++j) {
    const std::size_t pick = rng.index(vocab.size());
    c.prompts.keypoints.push_back(vocab[pick]);
    vocab.erase(vocab.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return c;
}

using Polygon = std::vector<std::array<double, 2>>;

inline bool inside(const Polygon& poly, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a[1] > y) != (b[1] > y) && x < (b[0] - a[0]) * (y - a[1]) / (b[1] - a[1]) + a[0]) in = !in;
  }
  return in;
}

// Filled regions (pixel units) that make up the rendered shape.
inline std::vector<Polygon> shape_regions(const Category& c, const Polygon& pts, double arm_width) {
  if (c.kind == ShapeKind::polygon) return {pts};
  std::vector<Polygon> out;
  const auto& ctr = pts[0];
  for (std::size_t j = 1; j < pts.size(); ++j) {
    const double dx = pts[j][0] - ctr[0], dy = pts[j][1] - ctr[1];
    const double len = std::hypot(dx, dy);
    const double px = -dy / len * arm_width, py = dx / len * arm_width;
    out.push_back({{ctr[0] + px, ctr[1] + py}, pts[j], {ctr[0] - px, ctr[1] - py},
                   {ctr[0] - dx / len * arm_width, ctr[1] - dy / len * arm_width}});
  }
  return out;
}

inline void paint(Image& img, const std::vector<Polygon>& regions, double value) {
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      for (const auto& r : regions) {
        if (inside(r, px, py)) {
          img.at(y, x) = value;
          break;
        }
      }
    }
  }
}

inline Polygon place(const Category& c, double cx, double cy, double theta, double sx, double sy) {
  Polygon out;
  const double ct = std::cos(theta), st = std::sin(theta);
  for (const auto& p : c.points) {
    const double x = p[0] * sx, y = p[1] * sy;
    out.push_back({cx + ct * x - st * y, cy + st * x + ct * y});
  }
  return out;
}

inline double min_pairwise(const Polygon& pts) {
  double best = 1e300;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::min(best, std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]));
  return best;
}

inline SceneSample render_instance(const std::vector<Category>& cats, const Category& cat,
                                   std::size_t size, Rng& rng) {
  const double side = static_cast<double>(size);
  const double margin = 3.0;
  Polygon pts;
  for (;;) {
    const double theta = rng.uniform(-0.35, 0.35);
    const double s = rng.uniform(0.25, 0.375) * side;
    const double sx = s * rng.uniform(0.85, 1.15), sy = s * rng.uniform(0.85, 1.15);
    Polygon centred = place(cat, 0.0, 0.0, theta, sx, sy);
    double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
    for (const auto& p : centred) {
      minx = std::min(minx, p[0]);
      maxx = std::max(maxx, p[0]);
      miny = std::min(miny, p[1]);
      maxy = std::max(maxy, p[1]);
    }
    const double lo_x = margin - minx, hi_x = side - margin - maxx;
    const double lo_y = margin - miny, hi_y = side - margin - maxy;
    if (lo_x >= hi_x || lo_y >= hi_y) continue;
    const double cx = rng.uniform(lo_x, hi_x), cy = rng.uniform(lo_y, hi_y);
    pts = place(cat, cx, cy, theta, sx, sy);
    if (min_pairwise(pts) < 4.0) continue;  // degenerate after transform
    break;
  }

  Image img = Image::blank(size, size);
  for (double& v : img.pixels) v = rng.uniform(0.0, 0.12);
  if (cats.size() > 1 && rng.uniform() < 0.5) {
    std::size_t other = rng.index(cats.size() - 1);
    if (other >= cat.id) ++other;
    const Category& decoy = cats[other];
    const double s = rng.uniform(0.1, 0.16) * side;
    Polygon dp = place(decoy, rng.uniform(0.15, 0.85) * side, rng.uniform(0.15, 0.85) * side,
                       rng.uniform(-3.14159, 3.14159), s, s);
    paint(img, shape_regions(decoy, dp, 0.12 * s), rng.uniform(0.25, 0.45));
  }
  const double arm_width = 0.12 * side * 0.3;
  paint(img, shape_regions(cat, pts, arm_width), rng.uniform(0.65, 1.0));
  for (double& v : img.pixels) {
    v = std::clamp(v + rng.uniform(-0.04, 0.04), 0.0, 1.0);
    v = std::round(v * 255.0) / 255.0;
  }

  SceneSample s;
  s.category = cat.id;
  s.image = std::move(img);
  std::vector<double> kp;
  double minx = 1.0, maxx = 0.0, miny = 1.0, maxy = 0.0;
  for (const auto& p : pts) {
    const double x = p[0] / side, y = p[1] / side;
    kp.push_back(x);
    kp.push_back(y);
    minx = std::min(minx, x);
    maxx = std::max(maxx, x);
    miny = std::min(miny, y);
    maxy = std::max(maxy, y);
  }
  s.keypoints = Tensor::from({pts.size(), 2}, std::move(kp));
  const double pad = 1.0 / side;
  const double x0 = std::max(0.0, minx - pad), y0 = std::max(0.0, miny - pad);
  const double x1 = std::min(1.0, maxx + pad), y1 = std::min(1.0, maxy + pad);
  s.bbox = {x0, y0, x1 - x0, y1 - y0};
  s.skeleton = cat.skeleton;
  s.prompts = cat.prompts;
  return s;
}

}  // namespace detail

/// Procedural shape dataset. Categories alternate between irregular polygons
/// (cycle skeleton) and stars (hub skeleton) of varying keypoint counts;
/// instances vary by affine transform, fill intensity, noise and an optional
/// decoy shape from another category. Deterministic in `seed`.
inline Dataset synth_dataset(std::uint64_t seed, std::size_t n_categories,
                             std::size_t instances_per_category, std::size_t image_size = 64) {
  if (n_categories < 2) throw InputError("synth_dataset: need at least two categories");
  Dataset d;
  d.seed = seed;
  d.image_size = image_size;
  for (std::size_t c = 0; c < n_categories; ++c) d.categories.push_back(detail::make_category(c, seed));
  for (const auto& cat : d.categories) {
    for (std::size_t i = 0; i < instances_per_category; ++i) {
      Rng rng(Rng::derive(seed, "instance-" + std::to_string(cat.id) + "-" + std::to_string(i)));
      SceneSample s = detail::render_instance(d.categories, cat, image_size, rng);
      s.index = d.samples.size();
      s.instance = i;
      d.samples.push_back(std::move(s));
    }
  }
  return d;
}

inline Dataset synth_dataset(const ExperimentConfig& cfg) {
  return synth_dataset(cfg.seed, cfg.n_categories, cfg.instances_per_category);
}

enum class Split { train, holdout, val, test, all };

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "holdout") return Split::holdout;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  if (s == "all") return Split::all;
  throw InputError("unknown split: " + s);
}

inline std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::holdout: return "holdout";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::all: return "all";
  }
  return "all";
}

/// Samples belonging to `split`: "train" is the first `train_instances`
/// instances of each training category, "holdout" the remaining ones.
inline std::vector<const SceneSample*> select_split(const Dataset& d, const ExperimentConfig& cfg,
                                                    Split split) {
  auto in = [](const std::vector<std::size_t>& v, std::size_t id) {
    return std::find(v.begin(), v.end(), id) != v.end();
  };
  std::vector<const SceneSample*> out;
  for (const auto& s : d.samples) {
    bool keep = false;
    switch (split) {
      case Split::train: keep = in(cfg.train_categories, s.category) && s.instance < cfg.train_instances; break;
      case Split::holdout: keep = in(cfg.train_categories, s.category) && s.instance >= cfg.train_instances; break;
      case Split::val: keep = in(cfg.val_categories, s.category); break;
      case Split::test: keep = in(cfg.test_categories, s.category); break;
      case Split::all: keep = true; break;
    }
    if (keep) out.push_back(&s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// On-disk layout
//   dataset.txt                      seed, counts, image size
//   categories/NN.prompts.txt        category line + keypoint lines
//   categories/NN.skeleton.txt       one "i j" edge per line
//   images/NNNNN.pgm                 8-bit binary PGM
//   annotations.csv                  index,category,instance,bbox,keypoints
// ---------------------------------------------------------------------------

namespace detail {

inline std::string zero_pad(std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, v);
  return buf;
}

inline void write_pgm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write image: " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (double v : img.pixels) out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
}

inline Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  if (!(in >> magic >> w >> h >> maxval) || magic != "P5" || maxval != 255) {
    throw InputError("not an 8-bit binary PGM: " + path.string());
  }
  in.get();
  Image img = Image::blank(h, w);
  for (double& v : img.pixels) {
    const int c = in.get();
    if (c == EOF) throw InputError("truncated PGM: " + path.string());
    v = static_cast<double>(c) / 255.0;
  }
  return img;
}

inline void write_skeleton(const std::filesystem::path& path, const Skeleton& s) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write skeleton: " + path.string());
  for (auto [a, b] : s.edges()) out << a << ' ' << b << '\n';
}

inline Skeleton read_skeleton(const std::filesystem::path& path, std::size_t joints) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open skeleton file: " + path.string());
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t a = 0, b = 0;
  while (in >> a >> b) edges.emplace_back(a, b);
  if (!in.eof()) throw InputError("malformed skeleton file: " + path.string());
  return Skeleton(joints, std::move(edges));
}

}  // namespace detail

inline void write_dataset(const std::filesystem::path& dir, const Dataset& d) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "categories");
  fs::create_directories(dir / "images");
  {
    std::ofstream meta(dir / "dataset.txt");
    meta << "seed=" << d.seed << "\nn_categories=" << d.categories.size()
         << "\nsamples=" << d.samples.size() << "\nimage_size=" << d.image_size << '\n';
  }
  for (const auto& c : d.categories) {
    const std::string stem = detail::zero_pad(c.id, 2);
    write_prompt_file((dir / "categories" / (stem + ".prompts.txt")).string(), c.prompts);
    detail::write_skeleton(dir / "categories" / (stem + ".skeleton.txt"), c.skeleton);
  }
  std::ofstream ann(dir / "annotations.csv");
  ann << "index,category,instance,bbox_x,bbox_y,bbox_w,bbox_h,keypoints\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& s : d.samples) {
    detail::write_pgm(dir / "images" / (detail::zero_pad(s.index, 5) + ".pgm"), s.image);
    ann << s.index << ',' << s.category << ',' << s.instance << ',' << num(s.bbox.x) << ','
        << num(s.bbox.y) << ',' << num(s.bbox.w) << ',' << num(s.bbox.h) << ',';
    for (std::size_t i = 0; i < s.keypoints.size(); ++i) ann << (i ? " " : "") << num(s.keypoints[i]);
    ann << '\n';
  }
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  Dataset d;
  std::ifstream meta(dir / "dataset.txt");
  if (!meta) throw InputError("not a dataset directory (missing dataset.txt): " + dir.string());
  std::string line;
  std::size_t n_categories = 0;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "seed") d.seed = std::stoull(value);
    else if (key == "n_categories") n_categories = std::stoull(value);
    else if (key == "image_size") d.image_size = std::stoull(value);
  }
  for (std::size_t c = 0; c < n_categories; ++c) {
    const std::string stem = detail::zero_pad(c, 2);
    Category cat;
    cat.id = c;
    cat.prompts = read_prompt_file((dir / "categories" / (stem + ".prompts.txt")).string());
    cat.skeleton = detail::read_skeleton(dir / "categories" / (stem + ".skeleton.txt"),
                                         cat.prompts.keypoints.size());
    d.categories.push_back(std::move(cat));
  }
  std::ifstream ann(dir / "annotations.csv");
  if (!ann) throw InputError("missing annotations.csv in " + dir.string());
  std::getline(ann, line);
  while (std::getline(ann, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(row, field, ',')) f.push_back(field);
    if (f.size() != 8) throw InputError("malformed annotation row: " + line);
    SceneSample s;
    s.index = std::stoull(f[0]);
    s.category = std::stoull(f[1]);
    s.instance = std::stoull(f[2]);
    if (s.category >= d.categories.size()) throw InputError("annotation references unknown category");
    s.bbox = {std::stod(f[3]), std::stod(f[4]), std::stod(f[5]), std::stod(f[6])};
    std::istringstream kps(f[7]);
    std::vector<double> kp;
    double v = 0;
    while (kps >> v) kp.push_back(v);
    const auto& cat = d.categories[s.category];
    if (kp.size() != 2 * cat.prompts.keypoints.size()) {
      throw InputError("keypoint count does not match prompt file for sample " + f[0]);
    }
    const std::size_t joints = kp.size() / 2;
    s.keypoints = Tensor::from({joints, 2}, std::move(kp));
    s.image = detail::read_pgm(dir / "images" / (detail::zero_pad(s.index, 5) + ".pgm"));
    s.skeleton = cat.skeleton;
    s.prompts = cat.prompts;
    d.samples.push_back(std::move(s));
  }
  return d;
}

}  // namespace textpose
