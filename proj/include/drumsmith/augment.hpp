#pragma once

#include <utility>

#include "drumsmith/pianoroll.hpp"
#include "drumsmith/rng.hpp"

namespace drumsmith {

struct AugmentConfig {
  double instrument_mask_frac = 0.40;      // of samples per epoch, split equally over 4
  double timestep_mask_frac = 0.20;        // of timesteps per sample
  double input_drop_frac = 0.20;           // in-filling model only
  double drum_noise_max_density_delta = 0.01;
  bool enabled = true;
};

// Silence-encode one melodic instrument block (silence bit 1, pitches 0)
// at every timestep. Throws IndexOutOfRange for which outside [0,4).
MASample mask_instrument(MASample ma, int which);

// Per-sample single draw u in [0,1): u < frac masks instrument
// floor(u / (frac/4)), so the fraction splits equally over the four.
MASample apply_instrument_masking(MASample ma, Rng& rng, double frac = 0.40);

// Silence-encode exactly floor(frac*352) whole timesteps, chosen uniformly
// without replacement.
MASample mask_timesteps(MASample ma, double frac, Rng& rng);

// With probability frac, replace one side (fair coin) by its all-silent
// encoding.
std::pair<MASample, PASample> drop_input(MASample ma, PASample pa, Rng& rng,
                                         double frac = 0.20);

// Flip a uniform number (in [0, ceil(delta*352*16)]) of distinct cells,
// adding or removing strokes.
PASample drum_noise(PASample pa, Rng& rng, double max_density_delta = 0.01);

// All-silent encodings.
MASample silent_ma();
PASample silent_pa();

}  // namespace drumsmith
