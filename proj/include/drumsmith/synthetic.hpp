#pragma once

// Deterministic synthetic corpus: template grooves with section-boundary
// fills, melodic accompaniment changing chords at the same boundaries and
// switching to a dense build-up texture under fill bars. Fills use tom/crash
// lanes only, so every fill bar is cell-disjoint from the groove bars around
// it and the novelty function peaks exactly there.

#include <cstdint>
#include <string>
#include <vector>

#include "drumsmith/pianoroll.hpp"
#include "drumsmith/rng.hpp"

namespace drumsmith {

struct SyntheticOptions {
  int n_songs = 200;
  int min_sections = 3;
  int max_sections = 4;
  int min_section_bars = 7;
  int max_section_bars = 10;
};

struct SyntheticSong {
  MultiTrackPianoroll song;  // raw: resolution 24, 128-pitch tracks
  std::vector<int> fill_bars;
  std::string id;
};

SyntheticSong synth_song(Rng& rng, const SyntheticOptions& opt, std::string id);

std::vector<SyntheticSong> synth_corpus(const SyntheticOptions& opt, uint64_t seed);

// Processed-domain percussion track (bars x 32 rows, 16 lanes) made of a
// constant groove with n_fills lane-disjoint fill bars injected at valid
// peak positions (>= 3 bars apart, inside [6, bars-7]).
ByteGrid synth_novelty_track(Rng& rng, int bars, int n_fills, std::vector<int>* fill_bars);

}  // namespace drumsmith
