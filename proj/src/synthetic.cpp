#include "drumsmith/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace drumsmith {

namespace {

constexpr int kRawBar = kRawResolution * kBeatsPerBar;  // 96

// grid timestep (0..31) -> raw timestep within a bar
constexpr int raw_t(int grid_t) { return grid_t * 3; }

struct GroovePattern {
  // grid positions per GM pitch
  std::vector<std::pair<int, std::vector<int>>> hits;
};

// Grooves stay on lanes {snare, closed/open hi-hat, kick, ride}; fills stay
// on {crash, toms}. Disjoint lanes keep Eq.-1 dissimilarity at exactly 1.
const std::vector<GroovePattern>& groove_templates() {
  static const std::vector<GroovePattern> patterns = {
      // straight eighths
      {{{36, {0, 16}}, {38, {8, 24}}, {42, {0, 4, 8, 12, 16, 20, 24, 28}}}},
      // sixteenth hats, syncopated kick
      {{{36, {0, 12, 16, 28}},
        {38, {8, 24}},
        {42, {0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30}}}},
      // ride groove with open-hat accent
      {{{36, {0, 16, 22}}, {38, {8, 24}}, {51, {0, 4, 8, 12, 16, 20, 24, 28}}, {46, {30}}}},
      // half-time feel
      {{{36, {0, 20}}, {38, {16}}, {42, {0, 4, 8, 12, 16, 20, 24, 28}}}},
  };
  return patterns;
}

struct FillPattern {
  std::vector<std::pair<int, std::vector<int>>> hits;
};

const std::vector<FillPattern>& fill_templates() {
  static const std::vector<FillPattern> patterns = {
      // descending tom run in sixteenths, crash on the downbeat
      {{{49, {0}},
        {50, {0, 2, 4, 6}},
        {47, {8, 10, 12, 14}},
        {45, {16, 18, 20, 22}},
        {41, {24, 26, 28, 30}}}},
      // snareless tom eighths with floor-tom accents
      {{{49, {0}}, {48, {0, 4, 8, 12}}, {45, {16, 20}}, {43, {24, 26, 28, 30}}}},
      // sparse build: floor toms on the back half
      {{{43, {16, 18, 20, 22}}, {41, {24, 25, 26, 27, 28, 29, 30, 31}}}},
  };
  return patterns;
}

void stamp(ByteGrid& track, int bar, int pitch, const std::vector<int>& grid_positions,
           uint8_t velocity) {
  for (int g : grid_positions) {
    track.at(bar * kRawBar + raw_t(g), pitch) = velocity;
  }
}

}  // namespace

SyntheticSong synth_song(Rng& rng, const SyntheticOptions& opt, std::string id) {
  const int sections =
      opt.min_sections + static_cast<int>(rng.uniform_int(opt.max_sections - opt.min_sections + 1));
  std::vector<int> lengths(sections);
  for (int s = 0; s < sections; ++s) {
    lengths[s] = opt.min_section_bars +
                 static_cast<int>(rng.uniform_int(opt.max_section_bars - opt.min_section_bars + 1));
  }
  // the trailing section must cover the last fill's right context
  lengths.back() = std::max(lengths.back(), 8);
  const int bars = std::accumulate(lengths.begin(), lengths.end(), 0);

  SyntheticSong out;
  out.id = std::move(id);
  MultiTrackPianoroll& song = out.song;
  song.resolution = kRawResolution;
  for (auto& t : song.melodic) t = ByteGrid(bars * kRawBar, kMidiPitches);
  song.percussion = ByteGrid(bars * kRawBar, kMidiPitches);

  const GroovePattern& groove = groove_templates()[rng.uniform_int(groove_templates().size())];
  const int root_base = 40 + static_cast<int>(rng.uniform_int(12));  // E2..D#3
  static const int progression[4] = {0, 5, 7, 3};

  std::vector<int> fill_bars;
  int bar0 = 0;
  for (int s = 0; s < sections; ++s) {
    const int root = root_base + progression[s % 4];
    const bool has_fill = s + 1 < sections;
    const int fill_bar = bar0 + lengths[s] - 1;
    for (int b = bar0; b < bar0 + lengths[s]; ++b) {
      const bool is_fill = has_fill && b == fill_bar;
      if (is_fill) {
        const FillPattern& fill = fill_templates()[rng.uniform_int(fill_templates().size())];
        for (const auto& [pitch, pos] : fill.hits) stamp(song.percussion, b, pitch, pos, 110);
        // build-up texture: dense piano sixteenths, guitar and strings drop out
        for (int g = 0; g < kBarTimesteps; g += 2) {
          song.melodic[0].at(b * kRawBar + raw_t(g), root + 12) = 100;
          song.melodic[0].at(b * kRawBar + raw_t(g), root + 16) = 100;
        }
        for (int g = 0; g < kBarTimesteps; g += 4) {
          song.melodic[2].at(b * kRawBar + raw_t(g), root - 12) = 95;
        }
      } else {
        for (const auto& [pitch, pos] : groove.hits) stamp(song.percussion, b, pitch, pos, 100);
        // piano triad on the beats
        for (int beat = 0; beat < kBeatsPerBar; ++beat) {
          const int t = b * kRawBar + beat * kRawResolution;
          song.melodic[0].at(t, root) = 90;
          song.melodic[0].at(t, root + 4) = 85;
          song.melodic[0].at(t, root + 7) = 85;
        }
        // guitar off-beat eighths
        for (int g = 2; g < kBarTimesteps; g += 4) {
          song.melodic[1].at(b * kRawBar + raw_t(g), root + 7) = 80;
          song.melodic[1].at(b * kRawBar + raw_t(g), root + 12) = 80;
        }
        // bass eighth-note root
        for (int g = 0; g < kBarTimesteps; g += 4) {
          song.melodic[2].at(b * kRawBar + raw_t(g), root - 12) = 95;
        }
        // strings hold root+7 through the bar
        for (int t = b * kRawBar; t < (b + 1) * kRawBar; ++t) {
          song.melodic[3].at(t, root + 19) = 70;
        }
      }
    }
    if (has_fill) fill_bars.push_back(fill_bar);
    bar0 += lengths[s];
  }
  out.fill_bars = std::move(fill_bars);
  return out;
}

std::vector<SyntheticSong> synth_corpus(const SyntheticOptions& opt, uint64_t seed) {
  Rng root(seed);
  std::vector<SyntheticSong> out;
  out.reserve(opt.n_songs);
  for (int i = 0; i < opt.n_songs; ++i) {
    Rng rng = root.fork(i);
    char name[32];
    std::snprintf(name, sizeof(name), "synth_%04d", i);
    out.push_back(synth_song(rng, opt, name));
  }
  return out;
}

ByteGrid synth_novelty_track(Rng& rng, int bars, int n_fills, std::vector<int>* fill_bars) {
  if (bars < 13) throw SongTooShort("novelty track needs at least 13 bars");
  ByteGrid track(bars * kBarTimesteps, kNumLanes);
  // constant groove in the processed domain
  auto groove_stamp = [&](int bar) {
    for (int t : {0, 16}) track.at(bar * kBarTimesteps + t, kKick) = 1;
    for (int t : {8, 24}) track.at(bar * kBarTimesteps + t, kSnare) = 1;
    for (int t = 0; t < kBarTimesteps; t += 4) track.at(bar * kBarTimesteps + t, kClosedHiHat) = 1;
  };
  for (int b = 0; b < bars; ++b) groove_stamp(b);

  // fill positions: inside [6, bars-7], pairwise >= 3 apart
  std::vector<int> chosen;
  int guard = 0;
  while (static_cast<int>(chosen.size()) < n_fills && guard++ < 10000) {
    const int b = 6 + static_cast<int>(rng.uniform_int(bars - 12));
    bool ok = true;
    for (int c : chosen) ok = ok && std::abs(b - c) >= 3;
    if (ok) chosen.push_back(b);
  }
  std::sort(chosen.begin(), chosen.end());
  for (int b : chosen) {
    // wipe the groove, lay a tom run + crash (lanes disjoint from the groove)
    std::fill(track.row(b * kBarTimesteps),
              track.row(b * kBarTimesteps) + static_cast<size_t>(kBarTimesteps) * kNumLanes,
              uint8_t{0});
    track.at(b * kBarTimesteps, kCrash) = 1;
    const int toms[5] = {kHighTom, kHiMidTom, kLowTom, kHighFloorTom, kLowFloorTom};
    for (int t = 0; t < kBarTimesteps; t += 2) {
      track.at(b * kBarTimesteps + t, toms[(t / 2) % 5]) = 1;
    }
  }
  if (fill_bars) *fill_bars = chosen;
  return track;
}

}  // namespace drumsmith
