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

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "textpose/config.hpp"
#include "textpose/model.hpp"
#include "textpose/optim.hpp"

namespace textpose {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary layout, all integers and doubles little-endian:
//   "TPCKPT\0\0"  u32 version  u32 reserved
//   u64 len, config text (key=value lines)
//   u64 optimizer step
//   u32 count, then per parameter:
//     u32 len, name   u32 rank, u64 dims[rank]   f64 values[n]
//     u8 has_moments [f64 m[n], f64 v[n]]
inline constexpr char kCheckpointMagic[8] = {'T', 'P', 'C', 'K', 'P', 'T', 0, 0};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ExperimentConfig config;
  ParamStore params;
  OptimState optim;
};

namespace detail {

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void u8(std::uint8_t v) { os_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str32(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void bytes(const char* p, std::size_t n) { os_.write(p, static_cast<std::streamsize>(n)); }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  std::uint8_t u8() {
    const int c = is_.get();
    if (c == EOF) throw CheckpointError("checkpoint: unexpected end of file");
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    std::string s(n, '\0');
    if (!is_.read(s.data(), static_cast<std::streamsize>(n))) {
      throw CheckpointError("checkpoint: unexpected end of file");
    }
    return s;
  }

 private:
  std::istream& is_;
};

}  // namespace detail

inline void save_checkpoint(const std::string& path, const ExperimentConfig& cfg,
                            const ParamStore& params, const OptimState& optim) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  detail::Writer w(out);
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(0);
  const std::string text = cfg.to_text();
  w.u64(text.size());
  w.bytes(text.data(), text.size());
  w.u64(optim.step);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    w.str32(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.u64(d);
    for (double v : t.data()) w.f64(v);
    auto m = optim.m.find(name);
    auto v = optim.v.find(name);
    const bool has = m != optim.m.end() && v != optim.v.end() && m->second.size() == t.size();
    w.u8(has ? 1 : 0);
    if (has) {
      for (double x : m->second) w.f64(x);
      for (double x : v->second) w.f64(x);
    }
  }
  if (!out) throw CheckpointError("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  detail::Reader r(in);
  if (r.str(sizeof kCheckpointMagic) != std::string(kCheckpointMagic, sizeof kCheckpointMagic)) {
    throw CheckpointError("not a checkpoint file: " + path);
  }
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  r.u32();
  Checkpoint ck;
  ck.config = ExperimentConfig::parse(r.str(r.u64()));
  ck.optim.step = r.u64();
  const auto count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.str(r.u32());
    Shape shape(r.u32());
    for (auto& d : shape) d = r.u64();
    std::vector<double> values(numel(shape));
    for (double& v : values) v = r.f64();
    if (r.u8()) {
      auto& m = ck.optim.m[name];
      auto& v = ck.optim.v[name];
      m.resize(values.size());
      v.resize(values.size());
      for (double& x : m) x = r.f64();
      for (double& x : v) x = r.f64();
    }
    ck.params.add(name, std::move(shape), std::move(values));
  }
  return ck;
}

inline Model load_model(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  return Model::from_params(ck.config, std::move(ck.params));
}

}  // namespace textpose
