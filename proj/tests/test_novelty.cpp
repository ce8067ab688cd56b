#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "drumsmith/novelty.hpp"
#include "drumsmith/synthetic.hpp"
#include "helpers.hpp"

using namespace drumsmith;
using drumsmith::testing::random_bar;

namespace {

Bar groove_bar() {
  Bar b;
  for (int t : {0, 16}) b.grid.at(t, kKick) = 1;
  for (int t : {8, 24}) b.grid.at(t, kSnare) = 1;
  for (int t = 0; t < kBarTimesteps; t += 4) b.grid.at(t, kClosedHiHat) = 1;
  return b;
}

Bar fill_bar() {
  Bar b;
  b.grid.at(0, kCrash) = 1;
  for (int t = 0; t < kBarTimesteps; t += 2) b.grid.at(t, kHighTom) = 1;
  return b;
}

// independent Eq.-1 implementation for cross-checks
double naive_dissim(const Bar& a, const Bar& b, double k) {
  int diff = 0, na = 0, nb = 0;
  for (int t = 0; t < kBarTimesteps; ++t) {
    for (int l = 0; l < kNumLanes; ++l) {
      diff += std::abs(int(a.grid.at(t, l)) - int(b.grid.at(t, l)));
      na += a.grid.at(t, l);
      nb += b.grid.at(t, l);
    }
  }
  return (na + nb) == 0 ? 0.0 : double(diff) * k / double(na + nb);
}

}  // namespace

TEST_CASE("bar_dissimilarity basics") {
  Bar g = groove_bar(), f = fill_bar(), empty;
  CHECK(bar_dissimilarity(g, g, 0.7) == 0.0);
  CHECK(bar_dissimilarity(empty, empty, 1.0) == 0.0);
  // disjoint supports: ||a-b||_1 = ||a||_1 + ||b||_1
  CHECK(bar_dissimilarity(g, f, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  // scale linearly in k
  CHECK(bar_dissimilarity(g, f, 0.25) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("hann weights: symmetric, normalized, decreasing") {
  const auto w = hann_weights();
  double sum = 0;
  for (double x : w) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  for (int d = 0; d < 5; ++d) CHECK(w[d] == doctest::Approx(w[9 - d]).epsilon(1e-12));
  // offsets -5..-1: strictly increasing toward the center
  for (int d = 0; d < 4; ++d) CHECK(w[d] < w[d + 1]);
  // raw value at |d|=1 before normalization
  const double raw1 = 0.5 * (1.0 + std::cos(M_PI / 6.0));
  CHECK(raw1 == doctest::Approx(0.9330127018922193).epsilon(1e-12));
  // normalization divides by the raw sum (exactly 5 in exact arithmetic)
  CHECK(w[4] == doctest::Approx(raw1 / 5.0).epsilon(1e-9));
}

TEST_CASE("novelty_value on constructed windows") {
  std::vector<Bar> bars(kSampleBars, groove_bar());

  SUBCASE("identical bars give 0") { CHECK(novelty_value(bars) == 0.0); }

  SUBCASE("center disjoint from all context gives 1") {
    bars[5] = fill_bar();
    CHECK(novelty_value(bars) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("center equal to left half, disjoint from right half gives 0.5") {
    for (int i = 6; i < kSampleBars; ++i) bars[i] = fill_bar();
    CHECK(novelty_value(bars) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("wrong window size throws") {
    bars.pop_back();
    CHECK_THROWS_AS(novelty_value(bars), ShapeMismatch);
  }
}

TEST_CASE("novelty_value is invariant under lane permutation") {
  Rng rng(5);
  std::vector<Bar> bars(kSampleBars);
  for (auto& b : bars) b = random_bar(rng);
  const double base = novelty_value(bars);
  // rotate all lanes by 5 in every bar
  std::vector<Bar> rotated(kSampleBars);
  for (int i = 0; i < kSampleBars; ++i) {
    for (int t = 0; t < kBarTimesteps; ++t) {
      for (int l = 0; l < kNumLanes; ++l) {
        rotated[i].grid.at(t, (l + 5) % kNumLanes) = bars[i].grid.at(t, l);
      }
    }
  }
  CHECK(novelty_value(rotated) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("novelty_profile: values, range, peaks") {
  SUBCASE("too-short song throws") {
    ByteGrid track(10 * kBarTimesteps, kNumLanes);
    CHECK_THROWS_AS(novelty_profile(track, "short"), SongTooShort);
  }

  SUBCASE("constant track: all values 0, no peaks") {
    const int bars = 20;
    ByteGrid track(bars * kBarTimesteps, kNumLanes);
    Bar g = groove_bar();
    for (int b = 0; b < bars; ++b) {
      std::copy(g.grid.data.begin(), g.grid.data.end(),
                track.data.begin() + size_t(b) * kBarTimesteps * kNumLanes);
    }
    NoveltyProfile p = novelty_profile(track, "const");
    CHECK(p.values.size() == size_t(bars - 10));
    CHECK(p.first_bar == 5);
    for (double v : p.values) CHECK(v == 0.0);
    CHECK(p.peaks.empty());
  }

  SUBCASE("one injected fill peaks exactly there") {
    const int bars = 21;
    ByteGrid track(bars * kBarTimesteps, kNumLanes);
    Bar g = groove_bar(), f = fill_bar();
    for (int b = 0; b < bars; ++b) {
      const Bar& src = (b == 10) ? f : g;
      std::copy(src.grid.data.begin(), src.grid.data.end(),
                track.data.begin() + size_t(b) * kBarTimesteps * kNumLanes);
    }
    NoveltyProfile p = novelty_profile(track, "one_fill");
    REQUIRE(p.peaks.size() == 1);
    CHECK(p.peaks[0] == 10);
    CHECK(p.value(10) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("profile matches a naive Eq.-1 reimplementation on synthetic tracks") {
  Rng rng(11);
  const auto w = hann_weights();
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> fills;
    const int bars = 16 + int(rng.uniform_int(10));
    ByteGrid track = synth_novelty_track(rng, bars, 1 + int(rng.uniform_int(3)), &fills);
    NoveltyProfile p = novelty_profile(track, "t");
    for (int b = 5; b <= bars - 6; ++b) {
      double expected = 0.0;
      int wi = 0;
      for (int off = -5; off <= 5; ++off) {
        if (off == 0) continue;
        expected += naive_dissim(slice_bar(track, b), slice_bar(track, b + off), w[wi]);
        ++wi;
      }
      REQUIRE(p.value(b) == doctest::Approx(expected).epsilon(1e-12));
    }
    // peaks: naive scan with the same margin rule
    std::vector<int> naive_peaks;
    for (int b = 6; b <= bars - 7; ++b) {
      if (p.value(b) - std::max(p.value(b - 1), p.value(b + 1)) > 0.1) naive_peaks.push_back(b);
    }
    REQUIRE(p.peaks == naive_peaks);
    REQUIRE(p.peaks == fills);
  }
}

TEST_CASE("margin rule filters minor deviations") {
  const int bars = 15;
  ByteGrid track(bars * kBarTimesteps, kNumLanes);
  Bar g = groove_bar();
  for (int b = 0; b < bars; ++b) {
    std::copy(g.grid.data.begin(), g.grid.data.end(),
              track.data.begin() + size_t(b) * kBarTimesteps * kNumLanes);
  }
  // a one-onset deviation: local max but under the 0.1 margin
  track.at(7 * kBarTimesteps + 2, kCowbell) = 1;
  NoveltyProfile p = novelty_profile(track, "minor");
  CHECK(p.value(7) > 0.0);
  CHECK(p.peaks.empty());
}

TEST_CASE("build_location_dataset balance and caps") {
  Rng rng(17);

  auto features_for = [&](int n_fills, int bars) {
    SongFeatures f;
    std::vector<int> fills;
    f.pa = synth_novelty_track(rng, bars, n_fills, &fills);
    f.ma = FloatGrid(bars * kBarTimesteps, kMaFeatureDim);
    f.song_id = "s" + std::to_string(bars);
    return std::pair(f, fills);
  };

  SUBCASE("song with no peaks contributes nothing") {
    auto [f, fills] = features_for(0, 20);
    LocationDataset ds = build_location_dataset(std::span(&f, 1), {}, 99);
    CHECK(ds.entries.empty());
    CHECK(ds.songs_skipped == 1);
  }

  SUBCASE("labels are balanced and capped at 10% of bars") {
    // 3 fills in a 25-bar song: cap floor(0.1*25)=2 positives
    auto [f, fills] = features_for(3, 25);
    REQUIRE(fills.size() == 3);
    LocationDataset ds = build_location_dataset(std::span(&f, 1), {}, 99);
    CHECK(ds.entries.size() == 4);  // 2 positives + 2 negatives
    int pos = 0, neg = 0;
    for (const auto& e : ds.entries) (e.label ? pos : neg)++;
    CHECK(pos == neg);
    // every positive is a fill bar; negatives stay away from fills
    for (const auto& e : ds.entries) {
      const bool is_fill = std::find(fills.begin(), fills.end(), e.bar) != fills.end();
      if (e.label) {
        CHECK(is_fill);
      } else {
        for (int fb : fills) CHECK(std::abs(e.bar - fb) > 1);
      }
    }
  }

  SUBCASE("deterministic under a fixed seed") {
    auto [f, fills] = features_for(2, 30);
    LocationDataset a = build_location_dataset(std::span(&f, 1), {}, 42);
    LocationDataset b = build_location_dataset(std::span(&f, 1), {}, 42);
    REQUIRE(a.entries.size() == b.entries.size());
    for (size_t i = 0; i < a.entries.size(); ++i) {
      CHECK(a.entries[i].bar == b.entries[i].bar);
      CHECK(a.entries[i].label == b.entries[i].label);
      CHECK(a.entries[i].ma == b.entries[i].ma);
    }
  }
}
