#include "drumsmith/novelty.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace drumsmith {

double bar_dissimilarity(const Bar& a, const Bar& b, double k) {
  int diff = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.grid.data.size(); ++i) {
    diff += std::abs(static_cast<int>(a.grid.data[i]) - static_cast<int>(b.grid.data[i]));
    na += a.grid.data[i];
    nb += b.grid.data[i];
  }
  if (na + nb == 0) return 0.0;
  return static_cast<double>(diff) * k / static_cast<double>(na + nb);
}

std::array<double, 10> hann_weights() {
  std::array<double, 10> w{};
  double sum = 0.0;
  int idx = 0;
  for (int d : {-5, -4, -3, -2, -1, 1, 2, 3, 4, 5}) {
    w[idx] = 0.5 * (1.0 + std::cos(std::numbers::pi * d / 6.0));
    sum += w[idx];
    ++idx;
  }
  for (double& x : w) x /= sum;
  return w;
}

double novelty_value(std::span<const Bar> bars11) {
  if (bars11.size() != kSampleBars) {
    throw ShapeMismatch("novelty_value needs exactly 11 bars");
  }
  static const std::array<double, 10> weights = hann_weights();
  const Bar& center = bars11[kSampleBars / 2];
  double total = 0.0;
  int wi = 0;
  for (int i = 0; i < kSampleBars; ++i) {
    if (i == kSampleBars / 2) continue;
    total += bar_dissimilarity(center, bars11[i], weights[wi]);
    ++wi;
  }
  return total;
}

NoveltyProfile novelty_profile(const ByteGrid& pa_track, std::string song_id,
                               double peak_margin) {
  const int bars = pa_track.rows / kBarTimesteps;
  if (bars < kSampleBars) {
    throw SongTooShort("need at least 11 bars, got " + std::to_string(bars));
  }
  std::vector<Bar> all(bars);
  for (int b = 0; b < bars; ++b) all[b] = slice_bar(pa_track, b);

  NoveltyProfile profile;
  profile.song_id = std::move(song_id);
  profile.total_bars = bars;
  const int half = kSampleBars / 2;
  profile.first_bar = half;
  profile.values.resize(bars - 2 * half);
  for (int b = half; b <= bars - 1 - half; ++b) {
    profile.values[b - half] =
        novelty_value(std::span<const Bar>(all.data() + b - half, kSampleBars));
  }
  // a peak needs both neighbors defined, so the edges of the range cannot peak
  for (size_t i = 1; i + 1 < profile.values.size(); ++i) {
    const double v = profile.values[i];
    const double larger = std::max(profile.values[i - 1], profile.values[i + 1]);
    if (v - larger > peak_margin) {
      profile.peaks.push_back(profile.first_bar + static_cast<int>(i));
    }
  }
  return profile;
}

LocationDataset build_location_dataset(std::span<const SongFeatures> songs,
                                       const LocationDatasetOptions& opt, uint64_t seed) {
  LocationDataset ds;
  ds.seed = seed;
  Rng root(seed);
  for (size_t si = 0; si < songs.size(); ++si) {
    const SongFeatures& song = songs[si];
    Rng rng = root.fork(si);
    if (song.bars() < kSampleBars) {
      ++ds.songs_skipped;
      continue;
    }
    NoveltyProfile profile = novelty_profile(song.pa, song.song_id, opt.peak_margin);
    if (profile.peaks.empty()) {
      ++ds.songs_skipped;
      continue;
    }
    // positives: peaks sorted by descending novelty, ties to the earlier bar
    std::vector<int> peaks = profile.peaks;
    std::stable_sort(peaks.begin(), peaks.end(), [&](int a, int b) {
      return profile.value(a) > profile.value(b);
    });
    const int cap = static_cast<int>(opt.max_positive_frac * profile.total_bars);
    if (cap <= 0) {
      ++ds.songs_skipped;
      continue;
    }
    if (static_cast<int>(peaks.size()) > cap) peaks.resize(cap);

    // negative candidates: bars with defined windows, away from any peak
    std::vector<int> candidates;
    for (int b = profile.first_bar; b < profile.first_bar + static_cast<int>(profile.values.size());
         ++b) {
      bool near_peak = false;
      for (int p : profile.peaks) {
        if (std::abs(b - p) <= opt.negative_exclusion_radius) {
          near_peak = true;
          break;
        }
      }
      if (!near_peak) candidates.push_back(b);
    }
    const size_t n = std::min(peaks.size(), candidates.size());
    if (n == 0) {
      ++ds.songs_skipped;
      continue;
    }
    peaks.resize(n);
    std::vector<size_t> chosen = rng.sample_without_replacement(candidates.size(), n);

    for (size_t i = 0; i < n; ++i) {
      LocationEntry pos;
      pos.ma = ma_window(song.ma, peaks[i]);
      pos.label = 1;
      pos.song_id = song.song_id;
      pos.bar = peaks[i];
      ds.entries.push_back(std::move(pos));

      LocationEntry neg;
      neg.ma = ma_window(song.ma, candidates[chosen[i]]);
      neg.label = 0;
      neg.song_id = song.song_id;
      neg.bar = candidates[chosen[i]];
      ds.entries.push_back(std::move(neg));
    }
    ++ds.songs_used;
  }
  return ds;
}

}  // namespace drumsmith
