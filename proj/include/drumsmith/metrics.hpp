#pragma once

#include <array>
#include <span>
#include <vector>

#include "drumsmith/pianoroll.hpp"

namespace drumsmith {

// Per-timestep fraction of all onsets; bins sum to 1. Throws EmptyInput if
// the bars carry no onset at all.
std::array<double, kBarTimesteps> onset_position_histogram(std::span<const Bar> bars);

// Number of lanes with at least one onset.
int instrument_count(const Bar& bar);

struct ICDeviation {
  double exact_match_frac = 0.0;
  double within_1_frac = 0.0;
};

// Bar-for-bar |IC_gen - IC_ref| statistics over aligned sample lists.
ICDeviation ic_deviation_report(std::span<const PASample> generated,
                                std::span<const PASample> reference);

// Eq.-1 distance between consecutive bars with k=1; 10 values per sample.
std::array<double, kSampleBars - 1> pattern_consistency(const PASample& sample);

// IC(bar) - IC(bar-1). Throws IndexOutOfRange for bar_index < 1 or >= 11.
int ic_change(const PASample& sample, int bar_index);

// Sum of bin-wise minima of two normalized distributions (same binning).
double overlap_area(std::span<const double> p, std::span<const double> q);

struct ClassificationReport {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;
  bool f1_defined = true;
};

// Standard binary P/R/Acc/F1; degenerate denominators are flagged undefined
// rather than silently reported as 0.
ClassificationReport classification_report(std::span<const int> preds,
                                           std::span<const int> labels);

// Normalized equal-width histogram over [lo, hi]; values outside clamp to
// the edge bins.
std::vector<double> histogram(std::span<const double> values, double lo, double hi, int bins);

}  // namespace drumsmith
