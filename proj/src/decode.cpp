#include "drumsmith/decode.hpp"

#include <algorithm>
#include <cmath>

#include "drumsmith/tokenizer.hpp"

namespace drumsmith {

DecodeStrategy decode_strategy_from_string(const std::string& name) {
  if (name == "greedy") return DecodeStrategy::Greedy;
  if (name == "sample") return DecodeStrategy::Sample;
  throw UnknownVariant("decode strategy '" + name + "' (expected greedy|sample)");
}

namespace {

int pick_token(std::span<const float> logits, DecodeStrategy strategy, Rng& rng) {
  if (strategy == DecodeStrategy::Greedy) {
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  // categorical sample from the softmax distribution
  float mx = logits[0];
  for (float l : logits) mx = std::max(mx, l);
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(static_cast<double>(logits[i]) - mx);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return static_cast<int>(rng.categorical(std::span<const double>(probs)));
}

}  // namespace

PASample generate_pa(const BasicDrumGen& model, const MASample& ma, DecodeStrategy strategy,
                     Rng& rng, int max_tokens, TokenSeq* tokens_out) {
  BasicGenSampler sampler(model, ma, max_tokens + 1);
  TokenSeq seq;
  seq.ids.reserve(512);
  int shifts = 0;
  int prev = BasicDrumGen::kBosId;
  while (shifts < kSampleTimesteps && static_cast<int>(seq.ids.size()) < max_tokens) {
    const std::vector<float>& logits = sampler.step(prev);
    const int token = pick_token(logits, strategy, rng);
    seq.ids.push_back(token);
    if (token == tokens::kShift) ++shifts;
    prev = token;
  }
  if (tokens_out) *tokens_out = seq;
  return decode(seq);
}

double bar_density(const Bar& bar) {
  return static_cast<double>(bar_l1_norm(bar)) /
         static_cast<double>(kBarTimesteps * kNumLanes);
}

double density_std(const PASample& sample) {
  std::array<double, kSampleBars> d{};
  double mean = 0.0;
  for (int b = 0; b < kSampleBars; ++b) {
    d[b] = bar_density(slice_bar(sample, b));
    mean += d[b];
  }
  mean /= kSampleBars;
  double var = 0.0;
  for (double x : d) var += (x - mean) * (x - mean);
  return std::sqrt(var / kSampleBars);
}

std::vector<PASample> filter_samples(std::span<const PASample> samples, const FilterOptions& opt,
                                     FilterReport* report) {
  FilterReport local;
  local.keep_mask.resize(samples.size(), true);
  std::vector<PASample> kept;
  for (size_t i = 0; i < samples.size(); ++i) {
    int silent = 0;
    for (int b = 0; b < kSampleBars; ++b) {
      if (bar_l1_norm(slice_bar(samples[i], b)) == 0) ++silent;
    }
    if (silent > opt.max_silent_bars) {
      local.keep_mask[i] = false;
      ++local.dropped_silent;
      continue;
    }
    if (density_std(samples[i]) > opt.density_std_threshold) {
      local.keep_mask[i] = false;
      ++local.dropped_density;
      continue;
    }
    kept.push_back(samples[i]);
    ++local.kept;
  }
  if (report) *report = local;
  return kept;
}

PipelineResult run_pipeline(const SongFeatures& song, const BasicDrumGen& basic,
                            const ImprovLocator& locator, const ImprovInfill& infill,
                            const PipelineOptions& opt, Rng& rng) {
  const int segments = song.bars() / kSampleBars;
  if (segments < 1) {
    throw SongTooShort("pipeline needs at least 11 bars, got " + std::to_string(song.bars()));
  }
  const DecodeStrategy strategy = decode_strategy_from_string(opt.strategy);

  PipelineResult result;
  result.covered_bars = segments * kSampleBars;
  result.pa = ByteGrid(result.covered_bars * kBarTimesteps, kNumLanes);

  // stage 1: basic PA per segment
  for (int s = 0; s < segments; ++s) {
    MASample ma;
    const int t0 = s * kSampleTimesteps;
    std::copy(song.ma.row(t0), song.ma.row(t0) + static_cast<size_t>(kSampleTimesteps) * kMaFeatureDim,
              ma.features.data.begin());
    PASample pa = generate_pa(basic, ma, strategy, rng, opt.max_tokens);
    std::copy(pa.grid.data.begin(), pa.grid.data.end(), result.pa.row(t0));
  }

  // stage 2: locator scan over every interior bar
  const int half = kSampleBars / 2;
  std::vector<MASample> windows;
  std::vector<int> window_bars;
  for (int b = half; b <= result.covered_bars - 1 - half; ++b) {
    windows.push_back(ma_window(song.ma, b));
    window_bars.push_back(b);
  }
  const std::vector<float> scores = locator.predict(windows);
  for (size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > opt.locator_threshold) result.flagged_bars.push_back(window_bars[i]);
  }

  // stage 3: in-fill flagged bars in ascending order against the updated PA
  for (int b : result.flagged_bars) {
    const MASample ma = ma_window(song.ma, b);
    const PASample context = mask_middle_bar(pa_window(result.pa, b));
    const Bar bar = infill.predict_bar(ma, context, opt.infill_threshold);
    std::copy(bar.grid.data.begin(), bar.grid.data.end(),
              result.pa.row(b * kBarTimesteps));
  }
  return result;
}

}  // namespace drumsmith
