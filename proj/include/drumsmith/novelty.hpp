#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "drumsmith/preprocess.hpp"
#include "drumsmith/rng.hpp"

namespace drumsmith {

// Dissimilarity between two bars: ||a-b||_1 * k / (||a||_1 + ||b||_1).
// Two empty bars are defined to be identical (0).
double bar_dissimilarity(const Bar& a, const Bar& b, double k);

// Hanning weights for context offsets -5..-1, +1..+5 (in that order):
// raw w(d) = 0.5*(1 + cos(pi*d/6)), normalized to sum 1. Symmetric and
// strictly decreasing in |d|.
std::array<double, 10> hann_weights();

// Weighted average dissimilarity of the center bar (index 5) against its
// 10 context bars.
double novelty_value(std::span<const Bar> bars11);

struct NoveltyProfile {
  // values[i] is the novelty of bar (first_bar + i); the first and last
  // 5 bars of the song have no value.
  std::vector<double> values;
  int first_bar = kSampleBars / 2;
  std::vector<int> peaks;  // absolute bar indices, ascending
  std::string song_id;
  int total_bars = 0;

  bool has_value(int bar) const {
    return bar >= first_bar && bar < first_bar + static_cast<int>(values.size());
  }
  double value(int bar) const { return values[bar - first_bar]; }
};

// Per-bar novelty for a full-song percussion grid (rows = bars*32), plus
// peak picking: a peak is a strict local maximum that exceeds both
// neighbors by more than peak_margin. Throws SongTooShort below 11 bars.
NoveltyProfile novelty_profile(const ByteGrid& pa_track, std::string song_id,
                               double peak_margin = 0.1);

struct LocationEntry {
  MASample ma;  // 11-bar window centered on the labeled bar
  int label = 0;  // 1 = improvisation (peak), 0 = plain bar
  std::string song_id;
  int bar = 0;
};

struct LocationDataset {
  std::vector<LocationEntry> entries;
  uint64_t seed = 0;
  int songs_used = 0;
  int songs_skipped = 0;
};

struct LocationDatasetOptions {
  double peak_margin = 0.1;
  double max_positive_frac = 0.10;   // cap on positives per song
  int negative_exclusion_radius = 1; // negatives stay this many bars from peaks
};

// Balanced positive/negative bar windows across songs. Positives are the
// top peaks by novelty value (ties to the earlier bar) capped at 10% of the
// song's bars; an equal number of negatives is drawn uniformly (seeded)
// from non-peak bars outside the exclusion zone.
LocationDataset build_location_dataset(std::span<const SongFeatures> songs,
                                       const LocationDatasetOptions& opt, uint64_t seed);

}  // namespace drumsmith
