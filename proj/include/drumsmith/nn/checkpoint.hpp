#pragma once

// Named-parameter binary archive: magic "DRCK", u16 version, u32 parameter
// count, per parameter (u32 name length + name, u32 rank, u32 dims...,
// raw little-endian f32 data), then u32-length-prefixed JSON metadata.
// Round-trips bit-exactly. See docs/formats.md.

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "drumsmith/nn/layers.hpp"

namespace drumsmith::nn {

struct CheckpointMeta {
  std::string model;
  int64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  uint64_t seed = 0;
  nlohmann::json extra;
};

namespace ckpt_detail {

constexpr char kMagic[4] = {'D', 'R', 'C', 'K'};
constexpr uint16_t kVersion = 1;

inline void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}
inline void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct Reader {
  const uint8_t* p;
  size_t left;
  void need(size_t n) {
    if (left < n) throw CheckpointMismatch("truncated checkpoint");
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(p[0]) | static_cast<uint16_t>(p[1]) << 8;
    p += 2; left -= 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
    p += 4; left -= 4;
    return v;
  }
  std::string str(uint32_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n; left -= n;
    return s;
  }
};

}  // namespace ckpt_detail

inline void save_checkpoint(const std::filesystem::path& path, const ParamRegistry<float>& reg,
                            const CheckpointMeta& meta) {
  using namespace ckpt_detail;
  std::string out;
  out.append(kMagic, 4);
  put_u16(out, kVersion);
  put_u32(out, static_cast<uint32_t>(reg.entries.size()));
  for (const auto& e : reg.entries) {
    put_u32(out, static_cast<uint32_t>(e.name.size()));
    out.append(e.name);
    put_u32(out, static_cast<uint32_t>(e.var.shape().size()));
    for (int d : e.var.shape()) put_u32(out, static_cast<uint32_t>(d));
    const auto& v = e.var.value();
    static_assert(sizeof(float) == 4);
    const size_t bytes = v.size() * 4;
    const size_t off = out.size();
    out.resize(off + bytes);
    std::memcpy(out.data() + off, v.data(), bytes);
  }
  nlohmann::json j{{"model", meta.model}, {"step", meta.step},   {"epoch", meta.epoch},
                   {"lr", meta.lr},       {"seed", meta.seed},   {"extra", meta.extra}};
  const std::string js = j.dump();
  put_u32(out, static_cast<uint32_t>(js.size()));
  out.append(js);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  f.flush();
  if (!f.good()) throw IoFailure("write failed on " + path.string());
}

// Loads into an existing registry; names, order and shapes must match.
inline CheckpointMeta load_checkpoint(const std::filesystem::path& path,
                                      ParamRegistry<float>& reg) {
  using namespace ckpt_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r{reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()};
  r.need(4);
  if (std::memcmp(r.p, kMagic, 4) != 0) throw CheckpointMismatch("bad magic in " + path.string());
  r.p += 4; r.left -= 4;
  if (r.u16() != kVersion) throw CheckpointMismatch("unsupported checkpoint version");
  const uint32_t count = r.u32();
  if (count != reg.entries.size()) {
    throw CheckpointMismatch("checkpoint has " + std::to_string(count) + " params, model has " +
                             std::to_string(reg.entries.size()));
  }
  for (auto& e : reg.entries) {
    const std::string name = r.str(r.u32());
    if (name != e.name) {
      throw CheckpointMismatch("parameter order mismatch: expected " + e.name + ", got " + name);
    }
    const uint32_t rank = r.u32();
    Shape shape(rank);
    for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(r.u32());
    if (shape != e.var.shape()) {
      throw CheckpointMismatch("shape mismatch for " + name + ": checkpoint " + shape_str(shape) +
                               ", model " + shape_str(e.var.shape()));
    }
    auto& v = e.var.value();
    const size_t n = v.size() * 4;
    r.need(n);
    std::memcpy(v.data(), r.p, n);
    r.p += n; r.left -= n;
  }
  const std::string js = r.str(r.u32());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointMismatch(std::string("bad checkpoint metadata: ") + e.what());
  }
  CheckpointMeta meta;
  meta.model = j.value("model", "");
  meta.step = j.value("step", int64_t(0));
  meta.epoch = j.value("epoch", 0);
  meta.lr = j.value("lr", 0.0);
  meta.seed = j.value("seed", uint64_t(0));
  meta.extra = j.value("extra", nlohmann::json::object());
  return meta;
}

inline CheckpointMeta peek_checkpoint_model(const std::filesystem::path& path) {
  using namespace ckpt_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r{reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()};
  r.need(4);
  if (std::memcmp(r.p, kMagic, 4) != 0) throw CheckpointMismatch("bad magic in " + path.string());
  // metadata sits at the tail: parse the trailing u32-prefixed JSON
  // by scanning from the front (cheap enough for our file sizes)
  r.p += 4; r.left -= 4;
  r.u16();
  const uint32_t count = r.u32();
  for (uint32_t i = 0; i < count; ++i) {
    r.str(r.u32());
    const uint32_t rank = r.u32();
    size_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) n *= r.u32();
    r.need(n * 4);
    r.p += n * 4; r.left -= n * 4;
  }
  const std::string js = r.str(r.u32());
  nlohmann::json j = nlohmann::json::parse(js);
  CheckpointMeta meta;
  meta.model = j.value("model", "");
  meta.step = j.value("step", int64_t(0));
  meta.epoch = j.value("epoch", 0);
  meta.lr = j.value("lr", 0.0);
  meta.seed = j.value("seed", uint64_t(0));
  meta.extra = j.value("extra", nlohmann::json::object());
  return meta;
}

}  // namespace drumsmith::nn
