#include "drumsmith/sample_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace drumsmith {

namespace {

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}
void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.append(s);
}
void put_f32(std::string& out, const std::vector<float>& v) {
  const size_t off = out.size();
  out.resize(off + v.size() * 4);
  std::memcpy(out.data() + off, v.data(), v.size() * 4);
}

struct Reader {
  const uint8_t* p;
  size_t left;
  std::string file;

  void need(size_t n) {
    if (left < n) throw MalformedHeader("truncated file " + file);
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
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
    p += 8; left -= 8;
    return v;
  }
  std::string str() {
    const uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n; left -= n;
    return s;
  }
  void f32(std::vector<float>& v) {
    need(v.size() * 4);
    std::memcpy(v.data(), p, v.size() * 4);
    p += v.size() * 4;
    left -= v.size() * 4;
  }
  void bytes(std::vector<uint8_t>& v) {
    need(v.size());
    std::memcpy(v.data(), p, v.size());
    p += v.size();
    left -= v.size();
  }
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  f.flush();
  if (!f.good()) throw IoFailure("write failed on " + path.string());
}

void check_magic(Reader& r, const char* magic) {
  r.need(4);
  if (std::memcmp(r.p, magic, 4) != 0) throw MalformedHeader("bad magic in " + r.file);
  r.p += 4;
  r.left -= 4;
}

}  // namespace

void save_pairs(const std::vector<SamplePair>& pairs, const std::filesystem::path& path) {
  std::string out;
  out.append("DRSP", 4);
  put_u16(out, 1);
  put_u32(out, static_cast<uint32_t>(pairs.size()));
  put_str(out, pairs.empty() ? std::string() : pairs.front().song_id);
  for (const auto& p : pairs) {
    put_u32(out, static_cast<uint32_t>(p.segment_index));
    put_f32(out, p.ma.features.data);
    out.append(reinterpret_cast<const char*>(p.pa.grid.data.data()), p.pa.grid.data.size());
  }
  write_file(path, out);
}

std::vector<SamplePair> load_pairs(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  Reader r{reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size(), path.string()};
  check_magic(r, "DRSP");
  if (r.u16() != 1) throw MalformedHeader("unsupported DRSP version in " + path.string());
  const uint32_t count = r.u32();
  const std::string song_id = r.str();
  std::vector<SamplePair> pairs(count);
  for (auto& p : pairs) {
    p.song_id = song_id;
    p.segment_index = static_cast<int>(r.u32());
    r.f32(p.ma.features.data);
    r.bytes(p.pa.grid.data);
  }
  if (r.left != 0) throw MalformedHeader("trailing bytes in " + path.string());
  return pairs;
}

void save_location_dataset(const LocationDataset& ds, const std::filesystem::path& path) {
  std::string out;
  out.append("DRLD", 4);
  put_u16(out, 1);
  put_u64(out, ds.seed);
  put_u32(out, static_cast<uint32_t>(ds.songs_used));
  put_u32(out, static_cast<uint32_t>(ds.songs_skipped));
  put_u32(out, static_cast<uint32_t>(ds.entries.size()));
  for (const auto& e : ds.entries) {
    put_str(out, e.song_id);
    put_u32(out, static_cast<uint32_t>(e.bar));
    out.push_back(static_cast<char>(e.label));
    put_f32(out, e.ma.features.data);
  }
  write_file(path, out);
}

LocationDataset load_location_dataset(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  Reader r{reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size(), path.string()};
  check_magic(r, "DRLD");
  if (r.u16() != 1) throw MalformedHeader("unsupported DRLD version in " + path.string());
  LocationDataset ds;
  ds.seed = r.u64();
  ds.songs_used = static_cast<int>(r.u32());
  ds.songs_skipped = static_cast<int>(r.u32());
  const uint32_t count = r.u32();
  ds.entries.resize(count);
  for (auto& e : ds.entries) {
    e.song_id = r.str();
    e.bar = static_cast<int>(r.u32());
    r.need(1);
    e.label = *r.p;
    ++r.p;
    --r.left;
    r.f32(e.ma.features.data);
  }
  if (r.left != 0) throw MalformedHeader("trailing bytes in " + path.string());
  return ds;
}

std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              const std::string& extension) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoFailure(dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace drumsmith
