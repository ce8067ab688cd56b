#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drumsmith/errors.hpp"

namespace drumsmith {

inline constexpr int kBeatsPerBar = 4;  // 4/4 meter throughout
inline constexpr int kRawResolution = 24;
inline constexpr int kGridResolution = 8;
inline constexpr int kBarTimesteps = kGridResolution * kBeatsPerBar;  // 32
inline constexpr int kSampleBars = 11;
inline constexpr int kSampleTimesteps = kSampleBars * kBarTimesteps;  // 352
inline constexpr int kMidiPitches = 128;
inline constexpr int kNumLanes = 16;
inline constexpr int kNumMelodic = 4;
inline constexpr int kPitchLo = 21;  // A0
inline constexpr int kPitchHi = 83;  // B5
inline constexpr int kMelodicPitches = kPitchHi - kPitchLo + 1;  // 63
inline constexpr int kMaBlockDim = 1 + kMelodicPitches;          // 64
inline constexpr int kMaFeatureDim = kNumMelodic * kMaBlockDim;  // 256
inline constexpr uint8_t kMaxVelocity = 127;

// Percussion lanes, canonical order.
enum Lane : int {
  kSnare = 0,
  kOpenHiHat,
  kClosedHiHat,
  kKick,
  kRide,
  kCrash,
  kLowFloorTom,
  kHighFloorTom,
  kHighTom,
  kHiMidTom,
  kLowTom,
  kCowbell,
  kPedalHiHat,
  kTambourine,
  kCabasa,
  kMaracas,
};

const std::array<std::string, kNumLanes>& lane_names();
const std::array<std::string, kNumMelodic>& melodic_track_names();

// Row-major byte matrix; holds velocities (0-127) or binary flags.
struct ByteGrid {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> data;

  ByteGrid() = default;
  ByteGrid(int r, int c, uint8_t fill = 0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  uint8_t& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  uint8_t at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  const uint8_t* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
  uint8_t* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }

  bool operator==(const ByteGrid&) const = default;
};

// Row-major float matrix (normalized model inputs).
struct FloatGrid {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  FloatGrid() = default;
  FloatGrid(int r, int c, float fill = 0.f)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  float& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  const float* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
  float* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }

  bool operator==(const FloatGrid&) const = default;
};

// One song: four melodic tracks plus percussion on a shared time grid.
// Raw songs have 128 pitch columns per track; pitch cropping narrows the
// melodic tracks to 63 columns.
struct MultiTrackPianoroll {
  std::array<ByteGrid, kNumMelodic> melodic;  // piano, guitar, bass, strings
  ByteGrid percussion;
  int resolution = kRawResolution;  // timesteps per beat

  int timesteps() const { return percussion.rows; }
  int bar_len() const { return resolution * kBeatsPerBar; }
  int bars() const { return bar_len() > 0 ? timesteps() / bar_len() : 0; }

  // Throws TrackLengthMismatch / VelocityOutOfRange on invariant violation.
  void validate() const;
};

// 11-bar melodic accompaniment tensor: 352 timesteps x 256 features.
// Per timestep, four 64-dim blocks (piano|guitar|bass|strings); block dim 0
// is the silence bit, dims 1-63 hold velocities of MIDI 21-83 in [0,1].
struct MASample {
  FloatGrid features{kSampleTimesteps, kMaFeatureDim};

  float& at(int t, int f) { return features.at(t, f); }
  float at(int t, int f) const { return features.at(t, f); }
  void validate() const;  // throws ShapeMismatch / Error on violation

  bool operator==(const MASample&) const = default;
};

// 11-bar percussion tensor: 352 timesteps x 16 binary lanes.
struct PASample {
  ByteGrid grid{kSampleTimesteps, kNumLanes};

  void validate() const;

  bool operator==(const PASample&) const = default;
};

// One bar sliced from a PASample: 32 x 16 binary.
struct Bar {
  ByteGrid grid{kBarTimesteps, kNumLanes};

  bool operator==(const Bar&) const = default;
};

// Number of 1-entries in the bar.
int bar_l1_norm(const Bar& bar);

// Rows [32*i, 32*i + 32) of the sample. Throws IndexOutOfRange.
Bar slice_bar(const PASample& sample, int bar_index);

// Same, from a full-song percussion grid (rows must be a multiple of 32).
Bar slice_bar(const ByteGrid& track, int bar_index);

// ---- DRPR container ----------------------------------------------------
// Little-endian binary: magic "DRPR", u16 version, u32 resolution,
// u32 timesteps, then 5 tracks (melodic x4, percussion) each as a u32
// length-prefixed row-major u8 velocity array of timesteps*128 bytes.
// See docs/formats.md.

MultiTrackPianoroll load_song(const std::filesystem::path& path);
void save_song(const MultiTrackPianoroll& song, const std::filesystem::path& path);

// Plain-text dump: one CSV per track (exact velocity values) into dir.
void dump_song_csv(const MultiTrackPianoroll& song, const std::filesystem::path& dir);

}  // namespace drumsmith
