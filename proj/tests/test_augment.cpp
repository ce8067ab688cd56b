#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "drumsmith/augment.hpp"
#include "helpers.hpp"

using namespace drumsmith;
using drumsmith::testing::random_pa;

namespace {

MASample busy_ma(Rng& rng, double density = 0.05) {
  MASample ma = silent_ma();
  for (int t = 0; t < kSampleTimesteps; ++t) {
    for (int b = 0; b < kNumMelodic; ++b) {
      float* block = ma.features.row(t) + b * kMaBlockDim;
      bool any = false;
      for (int p = 1; p < kMaBlockDim; ++p) {
        if (rng.uniform() < density) {
          block[p] = rng.uniform_f(0.1f, 1.f);
          any = true;
        }
      }
      block[0] = any ? 0.f : 1.f;
    }
  }
  return ma;
}

bool block_is_silent(const MASample& ma, int t, int which) {
  const float* block = ma.features.row(t) + which * kMaBlockDim;
  if (block[0] != 1.f) return false;
  for (int p = 1; p < kMaBlockDim; ++p) {
    if (block[p] != 0.f) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("mask_instrument silences exactly one block") {
  Rng rng(1);
  MASample ma = busy_ma(rng);

  SUBCASE("masking an already silent sample is a no-op") {
    MASample s = silent_ma();
    CHECK(mask_instrument(s, 0) == s);
  }

  SUBCASE("masking guitar leaves the other blocks bit-identical") {
    MASample masked = mask_instrument(ma, 1);
    masked.validate();
    for (int t = 0; t < kSampleTimesteps; ++t) {
      REQUIRE(block_is_silent(masked, t, 1));
      for (int b : {0, 2, 3}) {
        const float* orig = ma.features.row(t) + b * kMaBlockDim;
        const float* got = masked.features.row(t) + b * kMaBlockDim;
        for (int p = 0; p < kMaBlockDim; ++p) REQUIRE(orig[p] == got[p]);
      }
    }
  }

  SUBCASE("bad index throws") { CHECK_THROWS_AS(mask_instrument(ma, 4), IndexOutOfRange); }
}

TEST_CASE("instrument masking hits 40% overall, 10% per instrument") {
  Rng rng(2);
  MASample ma = busy_ma(rng);
  const int n = 10000;
  int masked_total = 0;
  std::array<int, kNumMelodic> per_instrument{};
  for (int i = 0; i < n; ++i) {
    MASample out = apply_instrument_masking(ma, rng);
    for (int w = 0; w < kNumMelodic; ++w) {
      bool all_silent = true;
      for (int t = 0; t < kSampleTimesteps && all_silent; ++t) {
        all_silent = block_is_silent(out, t, w);
      }
      if (all_silent) {
        ++masked_total;
        ++per_instrument[w];
        break;
      }
    }
  }
  CHECK(std::abs(masked_total / double(n) - 0.40) < 0.02);
  for (int w = 0; w < kNumMelodic; ++w) {
    CHECK(std::abs(per_instrument[w] / double(n) - 0.10) < 0.02);
  }
}

TEST_CASE("mask_timesteps silences exactly floor(frac*352) whole timesteps") {
  Rng rng(3);
  MASample ma = busy_ma(rng, 0.4);  // dense enough that no timestep is naturally silent

  SUBCASE("frac 0 is the identity") {
    Rng r(4);
    CHECK(mask_timesteps(ma, 0.0, r) == ma);
  }

  SUBCASE("frac 0.2 masks exactly 70 timesteps") {
    Rng r(5);
    MASample out = mask_timesteps(ma, 0.20, r);
    out.validate();
    int fully_masked = 0;
    for (int t = 0; t < kSampleTimesteps; ++t) {
      bool all = true;
      for (int b = 0; b < kNumMelodic; ++b) all = all && block_is_silent(out, t, b);
      fully_masked += all;
    }
    CHECK(fully_masked == 70);
  }

  SUBCASE("frac 1 silences everything") {
    Rng r(6);
    CHECK(mask_timesteps(ma, 1.0, r) == silent_ma());
  }
}

TEST_CASE("drop_input zeroes one side with the configured rate") {
  Rng rng(7);
  MASample ma = busy_ma(rng);
  PASample pa = random_pa(rng);

  SUBCASE("no-drop draw is the identity") {
    Rng r(8);  // first uniform from this seed is >= 0.2
    while (true) {
      Rng probe = r;
      if (probe.uniform() >= 0.2) break;
      r.next_u64();
    }
    auto [m, p] = drop_input(ma, pa, r, 0.2);
    CHECK(m == ma);
    CHECK(p == pa);
  }

  SUBCASE("forced drop zeroes exactly one side") {
    Rng r(9);
    // scan for a seed state that drops MA
    bool found_ma_drop = false, found_pa_drop = false;
    for (int i = 0; i < 200 && !(found_ma_drop && found_pa_drop); ++i) {
      Rng fork = r.fork(i);
      auto [m, p] = drop_input(ma, pa, fork, 0.2);
      if (m == silent_ma() && p == pa) found_ma_drop = true;
      if (p == silent_pa() && m == ma) found_pa_drop = true;
    }
    CHECK(found_ma_drop);
    CHECK(found_pa_drop);
  }

  SUBCASE("drop rate is 20% +- 2% over 10k draws") {
    Rng r(10);
    int drops = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      Rng fork = r.fork(i);
      auto [m, p] = drop_input(ma, pa, fork, 0.2);
      if (!(m == ma) || !(p == pa)) ++drops;
    }
    CHECK(std::abs(drops / double(n) - 0.20) < 0.02);
  }
}

TEST_CASE("drum_noise flips at most ceil(1%) distinct cells") {
  Rng rng(11);
  const int cells = kSampleTimesteps * kNumLanes;
  const int max_flips = static_cast<int>(std::ceil(0.01 * cells));  // 57

  SUBCASE("zero draw is the identity") {
    PASample pa = random_pa(rng);
    bool saw_identity = false;
    for (int i = 0; i < 300 && !saw_identity; ++i) {
      Rng fork = rng.fork(i);
      saw_identity = drum_noise(pa, fork) == pa;
    }
    CHECK(saw_identity);
  }

  SUBCASE("flip count bounded; flips are exact cell toggles") {
    for (int i = 0; i < 200; ++i) {
      PASample pa = random_pa(rng);
      Rng fork = rng.fork(1000 + i);
      PASample out = drum_noise(pa, fork);
      out.validate();
      int flipped = 0;
      for (size_t c = 0; c < pa.grid.data.size(); ++c) {
        flipped += pa.grid.data[c] != out.grid.data[c];
      }
      REQUIRE(flipped <= max_flips);
      // density change bounded by max_flips / cells
      auto onsets = [](const PASample& s) {
        int n = 0;
        for (uint8_t v : s.grid.data) n += v;
        return n;
      };
      REQUIRE(std::abs(onsets(out) - onsets(pa)) <= max_flips);
    }
  }

  SUBCASE("an all-ones sample can only lose strokes") {
    PASample ones;
    std::fill(ones.grid.data.begin(), ones.grid.data.end(), uint8_t{1});
    Rng fork = rng.fork(5000);
    PASample out = drum_noise(ones, fork);
    for (size_t c = 0; c < out.grid.data.size(); ++c) {
      REQUIRE(out.grid.data[c] <= ones.grid.data[c]);
    }
  }
}

TEST_CASE("augmentations are deterministic under a fixed seed") {
  Rng rng(13);
  MASample ma = busy_ma(rng);
  PASample pa = random_pa(rng);
  Rng a(99), b(99);
  CHECK(mask_timesteps(ma, 0.2, a) == mask_timesteps(ma, 0.2, b));
  Rng c(77), d(77);
  CHECK(drum_noise(pa, c) == drum_noise(pa, d));
}
