#pragma once

#include <filesystem>

#include "drumsmith/pianoroll.hpp"
#include "drumsmith/rng.hpp"

namespace drumsmith::testing {

inline MultiTrackPianoroll random_song(Rng& rng, int bars, int resolution = kRawResolution,
                                       double density = 0.02) {
  MultiTrackPianoroll song;
  song.resolution = resolution;
  const int t_total = bars * resolution * kBeatsPerBar;
  auto fill = [&](ByteGrid& g) {
    g = ByteGrid(t_total, kMidiPitches);
    for (auto& v : g.data) {
      if (rng.uniform() < density) v = static_cast<uint8_t>(1 + rng.uniform_int(127));
    }
  };
  for (auto& t : song.melodic) fill(t);
  fill(song.percussion);
  return song;
}

inline PASample random_pa(Rng& rng, double density = 0.08) {
  PASample pa;
  for (auto& v : pa.grid.data) v = rng.uniform() < density ? 1 : 0;
  return pa;
}

inline Bar random_bar(Rng& rng, double density = 0.1) {
  Bar bar;
  for (auto& v : bar.grid.data) v = rng.uniform() < density ? 1 : 0;
  return bar;
}

// unique scratch directory under the system temp dir
inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("drumsmith_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace drumsmith::testing
