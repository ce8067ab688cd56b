#include "drumsmith/augment.hpp"

#include <cmath>

namespace drumsmith {

MASample silent_ma() {
  MASample ma;
  for (int t = 0; t < kSampleTimesteps; ++t) {
    for (int b = 0; b < kNumMelodic; ++b) ma.at(t, b * kMaBlockDim) = 1.f;
  }
  return ma;
}

PASample silent_pa() { return PASample{}; }

namespace {

void silence_block(MASample& ma, int t, int which) {
  float* block = ma.features.row(t) + which * kMaBlockDim;
  block[0] = 1.f;
  for (int p = 1; p < kMaBlockDim; ++p) block[p] = 0.f;
}

}  // namespace

MASample mask_instrument(MASample ma, int which) {
  if (which < 0 || which >= kNumMelodic) {
    throw IndexOutOfRange("instrument index " + std::to_string(which));
  }
  for (int t = 0; t < kSampleTimesteps; ++t) silence_block(ma, t, which);
  return ma;
}

MASample apply_instrument_masking(MASample ma, Rng& rng, double frac) {
  const double u = rng.uniform();
  if (u >= frac) return ma;
  const int which = std::min(kNumMelodic - 1, static_cast<int>(u / (frac / kNumMelodic)));
  return mask_instrument(std::move(ma), which);
}

MASample mask_timesteps(MASample ma, double frac, Rng& rng) {
  const int count = static_cast<int>(frac * kSampleTimesteps);
  if (count <= 0) return ma;
  auto chosen = rng.sample_without_replacement(kSampleTimesteps, static_cast<size_t>(count));
  for (size_t t : chosen) {
    for (int b = 0; b < kNumMelodic; ++b) silence_block(ma, static_cast<int>(t), b);
  }
  return ma;
}

std::pair<MASample, PASample> drop_input(MASample ma, PASample pa, Rng& rng, double frac) {
  if (rng.uniform() < frac) {
    if (rng.bernoulli(0.5)) {
      ma = silent_ma();
    } else {
      pa = silent_pa();
    }
  }
  return {std::move(ma), std::move(pa)};
}

PASample drum_noise(PASample pa, Rng& rng, double max_density_delta) {
  const int cells = kSampleTimesteps * kNumLanes;
  const int max_flips = static_cast<int>(std::ceil(max_density_delta * cells));
  const int flips = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(max_flips) + 1));
  if (flips == 0) return pa;
  auto chosen = rng.sample_without_replacement(static_cast<size_t>(cells),
                                               static_cast<size_t>(flips));
  for (size_t c : chosen) pa.grid.data[c] ^= 1;
  return pa;
}

}  // namespace drumsmith
