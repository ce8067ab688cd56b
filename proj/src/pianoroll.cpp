#include "drumsmith/pianoroll.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace drumsmith {

const std::array<std::string, kNumLanes>& lane_names() {
  static const std::array<std::string, kNumLanes> names = {
      "snare",         "open_hihat", "closed_hihat", "kick",
      "ride",          "crash",      "low_floor_tom", "high_floor_tom",
      "high_tom",      "hi_mid_tom", "low_tom",       "cowbell",
      "pedal_hihat",   "tambourine", "cabasa",        "maracas"};
  return names;
}

const std::array<std::string, kNumMelodic>& melodic_track_names() {
  static const std::array<std::string, kNumMelodic> names = {"piano", "guitar",
                                                             "bass", "strings"};
  return names;
}

void MultiTrackPianoroll::validate() const {
  const int t = percussion.rows;
  for (int i = 0; i < kNumMelodic; ++i) {
    if (melodic[i].rows != t) {
      throw TrackLengthMismatch("track " + melodic_track_names()[i] + " has " +
                                std::to_string(melodic[i].rows) +
                                " timesteps, percussion has " + std::to_string(t));
    }
  }
  auto check_velocities = [](const ByteGrid& g, const std::string& name) {
    for (size_t i = 0; i < g.data.size(); ++i) {
      if (g.data[i] > kMaxVelocity) {
        throw VelocityOutOfRange("track " + name + " offset " + std::to_string(i) +
                                 ": velocity " + std::to_string(g.data[i]));
      }
    }
  };
  for (int i = 0; i < kNumMelodic; ++i) check_velocities(melodic[i], melodic_track_names()[i]);
  check_velocities(percussion, "percussion");
}

void MASample::validate() const {
  if (features.rows != kSampleTimesteps || features.cols != kMaFeatureDim) {
    throw ShapeMismatch("MASample must be 352x256");
  }
  for (int t = 0; t < kSampleTimesteps; ++t) {
    for (int b = 0; b < kNumMelodic; ++b) {
      const float* block = features.row(t) + b * kMaBlockDim;
      bool any = false;
      for (int p = 1; p < kMaBlockDim; ++p) {
        float v = block[p];
        if (v < 0.f || v > 1.f) throw Error("MASample value out of [0,1]");
        if (v != 0.f) any = true;
      }
      const float silence = block[0];
      if (silence != 0.f && silence != 1.f) throw Error("MASample silence bit not binary");
      if ((silence == 1.f) == any) {
        throw Error("MASample silence bit inconsistent at timestep " + std::to_string(t));
      }
    }
  }
}

void PASample::validate() const {
  if (grid.rows != kSampleTimesteps || grid.cols != kNumLanes) {
    throw ShapeMismatch("PASample must be 352x16");
  }
  for (uint8_t v : grid.data) {
    if (v > 1) throw Error("PASample entry not binary");
  }
}

int bar_l1_norm(const Bar& bar) {
  int n = 0;
  for (uint8_t v : bar.grid.data) n += v;
  return n;
}

Bar slice_bar(const ByteGrid& track, int bar_index) {
  const int bars = track.rows / kBarTimesteps;
  if (bar_index < 0 || bar_index >= bars) {
    throw IndexOutOfRange("bar index " + std::to_string(bar_index) + " out of [0," +
                          std::to_string(bars) + ")");
  }
  Bar out;
  std::memcpy(out.grid.data.data(), track.row(bar_index * kBarTimesteps),
              static_cast<size_t>(kBarTimesteps) * kNumLanes);
  return out;
}

Bar slice_bar(const PASample& sample, int bar_index) {
  if (bar_index < 0 || bar_index >= kSampleBars) {
    throw IndexOutOfRange("bar index " + std::to_string(bar_index) + " out of [0,11)");
  }
  return slice_bar(sample.grid, bar_index);
}

// ---- DRPR container ----------------------------------------------------

namespace {

constexpr char kMagic[4] = {'D', 'R', 'P', 'R'};
constexpr uint16_t kVersion = 1;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct Reader {
  const uint8_t* p;
  size_t left;

  void need(size_t n, const char* what) {
    if (left < n) throw MalformedHeader(std::string("truncated file while reading ") + what);
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = static_cast<uint16_t>(p[0]) | static_cast<uint16_t>(p[1]) << 8;
    p += 2;
    left -= 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
    p += 4;
    left -= 4;
    return v;
  }
};

}  // namespace

MultiTrackPianoroll load_song(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (!in.good() && !in.eof()) throw IoFailure("read failed on " + path.string());

  Reader r{reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()};
  r.need(4, "magic");
  if (std::memcmp(r.p, kMagic, 4) != 0) throw MalformedHeader("bad magic in " + path.string());
  r.p += 4;
  r.left -= 4;
  const uint16_t version = r.u16("version");
  if (version != kVersion) {
    throw MalformedHeader("unsupported version " + std::to_string(version));
  }
  MultiTrackPianoroll song;
  song.resolution = static_cast<int>(r.u32("resolution"));
  if (song.resolution <= 0) throw MalformedHeader("resolution must be positive");
  const uint32_t timesteps = r.u32("timesteps");
  const size_t track_bytes = static_cast<size_t>(timesteps) * kMidiPitches;

  auto read_track = [&](ByteGrid& g, const std::string& name) {
    const uint32_t len = r.u32("track length");
    if (len != track_bytes) {
      throw TrackLengthMismatch("track " + name + ": length " + std::to_string(len) +
                                " != " + std::to_string(track_bytes));
    }
    r.need(len, "track data");
    g = ByteGrid(static_cast<int>(timesteps), kMidiPitches);
    std::memcpy(g.data.data(), r.p, len);
    r.p += len;
    r.left -= len;
    for (size_t i = 0; i < g.data.size(); ++i) {
      if (g.data[i] > kMaxVelocity) {
        throw VelocityOutOfRange("track " + name + " offset " + std::to_string(i) +
                                 ": velocity " + std::to_string(g.data[i]));
      }
    }
  };
  for (int i = 0; i < kNumMelodic; ++i) read_track(song.melodic[i], melodic_track_names()[i]);
  read_track(song.percussion, "percussion");
  if (r.left != 0) throw MalformedHeader("trailing bytes in " + path.string());
  return song;
}

void save_song(const MultiTrackPianoroll& song, const std::filesystem::path& path) {
  song.validate();
  for (int i = 0; i < kNumMelodic; ++i) {
    if (song.melodic[i].cols != kMidiPitches) {
      throw ShapeMismatch("DRPR requires 128 pitch columns per track");
    }
  }
  if (song.percussion.cols != kMidiPitches) {
    throw ShapeMismatch("DRPR requires 128 pitch columns per track");
  }

  std::string out;
  out.append(kMagic, 4);
  put_u16(out, kVersion);
  put_u32(out, static_cast<uint32_t>(song.resolution));
  put_u32(out, static_cast<uint32_t>(song.timesteps()));
  auto put_track = [&](const ByteGrid& g) {
    put_u32(out, static_cast<uint32_t>(g.data.size()));
    out.append(reinterpret_cast<const char*>(g.data.data()), g.data.size());
  };
  for (const auto& t : song.melodic) put_track(t);
  put_track(song.percussion);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  f.flush();
  if (!f.good()) throw IoFailure("write failed on " + path.string());
}

void dump_song_csv(const MultiTrackPianoroll& song, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto dump = [&](const ByteGrid& g, const std::string& name) {
    std::ofstream f(dir / (name + ".csv"), std::ios::trunc);
    if (!f) throw IoFailure("cannot write CSV for track " + name);
    for (int r = 0; r < g.rows; ++r) {
      for (int c = 0; c < g.cols; ++c) {
        if (c) f << ',';
        f << static_cast<int>(g.at(r, c));
      }
      f << '\n';
    }
    if (!f.good()) throw IoFailure("write failed on CSV for track " + name);
  };
  for (int i = 0; i < kNumMelodic; ++i) dump(song.melodic[i], melodic_track_names()[i]);
  dump(song.percussion, "percussion");
}

}  // namespace drumsmith
