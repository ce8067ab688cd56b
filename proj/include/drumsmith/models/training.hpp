#pragma once

#include <span>

#include <nlohmann/json.hpp>

#include "drumsmith/augment.hpp"
#include "drumsmith/metrics.hpp"
#include "drumsmith/models/basic_gen.hpp"
#include "drumsmith/models/infill.hpp"
#include "drumsmith/models/locator.hpp"
#include "drumsmith/novelty.hpp"

namespace drumsmith {

struct BasicGenDataset {
  std::vector<MASample> ma;
  std::vector<std::vector<int>> tokens;  // encoded PA token ids
};

BasicGenDataset basicgen_dataset(std::span<const SamplePair> pairs);

struct InfillDataset {
  std::vector<MASample> ma;
  std::vector<PASample> pa_masked;
  std::vector<std::vector<float>> target;  // middle bar, flattened 32*16
};

// Windows centered on novelty-positive bars; PA context comes from the
// original track with the middle bar masked.
InfillDataset infill_dataset(std::span<const SongFeatures> songs,
                             const LocationDatasetOptions& opt);

struct TrainResult {
  nlohmann::json log = nlohmann::json::array();  // one entry per epoch
  double train_loss = 0.0;
  double val_loss = 0.0;
  ClassificationReport train_report, val_report;
  int epochs_run = 0;
  int64_t steps = 0;
  double final_lr = 0.0;
};

// Teacher-forced cross-entropy training; loss values are mean NLL per token.
TrainResult train_basicgen(BasicDrumGen& model, const BasicGenDataset& ds,
                           const TrainOptions& opt, const AugmentConfig& aug, uint64_t seed,
                           bool verbose = false);

// Huber loss between the softmax pair and the one-hot target.
TrainResult train_locator(ImprovLocator& model, const LocationDataset& ds,
                          const TrainOptions& opt, const AugmentConfig& aug, uint64_t seed,
                          bool verbose = false);

// Huber regression against the binary middle-bar grid; reports treat cells
// above 0.5 as predicted strokes.
TrainResult train_infill(ImprovInfill& model, const InfillDataset& ds, const TrainOptions& opt,
                         const AugmentConfig& aug, uint64_t seed, bool verbose = false);

// Stop-when-reached thresholds used by the smoke tests; 0 disables.
struct StopCondition {
  double train_loss_below = 0.0;
};

TrainResult train_basicgen(BasicDrumGen& model, const BasicGenDataset& ds,
                           const TrainOptions& opt, const AugmentConfig& aug, uint64_t seed,
                           bool verbose, const StopCondition& stop);

}  // namespace drumsmith
