#pragma once

#include <span>
#include <vector>

#include "drumsmith/config.hpp"
#include "drumsmith/models/basic_gen.hpp"
#include "drumsmith/models/infill.hpp"
#include "drumsmith/models/locator.hpp"
#include "drumsmith/preprocess.hpp"

namespace drumsmith {

enum class DecodeStrategy { Greedy, Sample };

DecodeStrategy decode_strategy_from_string(const std::string& name);

// Autoregressive decoding until 352 SHIFTs or max_tokens, whichever first;
// early stops zero-fill the remaining timesteps.
PASample generate_pa(const BasicDrumGen& model, const MASample& ma, DecodeStrategy strategy,
                     Rng& rng, int max_tokens = 6000, TokenSeq* tokens_out = nullptr);

struct FilterReport {
  int kept = 0;
  int dropped_silent = 0;   // more than max_silent_bars fully silent bars
  int dropped_density = 0;  // bar-density std over threshold
  std::vector<bool> keep_mask;
};

// Screens generated samples; a sample survives only if it has at most
// max_silent_bars silent bars and its per-bar density standard deviation
// stays within the threshold.
std::vector<PASample> filter_samples(std::span<const PASample> samples, const FilterOptions& opt,
                                     FilterReport* report = nullptr);

// per-bar onset density (onsets / 512) and its population std over 11 bars
double bar_density(const Bar& bar);
double density_std(const PASample& sample);

struct PipelineResult {
  ByteGrid pa;  // covered_bars*32 x 16
  std::vector<int> flagged_bars;
  int covered_bars = 0;
};

// Full evaluation pipeline: basic generation per 11-bar segment, locator
// scan over every interior bar, in-filling of flagged bars in ascending
// order against the progressively updated track.
PipelineResult run_pipeline(const SongFeatures& song, const BasicDrumGen& basic,
                            const ImprovLocator& locator, const ImprovInfill& infill,
                            const PipelineOptions& opt, Rng& rng);

}  // namespace drumsmith
