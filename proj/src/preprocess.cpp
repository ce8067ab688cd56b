#include "drumsmith/preprocess.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

namespace drumsmith {

PercussionMergeMap PercussionMergeMap::defaults() {
  PercussionMergeMap m;
  auto set = [&](std::initializer_list<int> pitches, Lane lane) {
    for (int p : pitches) m.lane_of[p] = static_cast<int8_t>(lane);
  };
  set({38, 40}, kSnare);        // acoustic + electric snare
  set({46}, kOpenHiHat);
  set({42}, kClosedHiHat);
  set({35, 36}, kKick);         // acoustic + standard kick
  set({51, 59}, kRide);         // ride 1 + ride 2
  set({49, 57}, kCrash);        // crash 1 + crash 2
  set({41}, kLowFloorTom);
  set({43}, kHighFloorTom);
  set({50}, kHighTom);
  set({47, 48}, kHiMidTom);     // low-mid + hi-mid folded together
  set({45}, kLowTom);
  set({56}, kCowbell);
  set({44}, kPedalHiHat);
  set({54}, kTambourine);
  set({69}, kCabasa);
  set({70}, kMaracas);
  m.validate();
  return m;
}

void PercussionMergeMap::validate() const {
  std::array<int, kNumLanes> sources{};
  for (int p = 0; p < kMidiPitches; ++p) {
    int8_t lane = lane_of[p];
    if (lane < -1 || lane >= kNumLanes) {
      throw Error("merge map: pitch " + std::to_string(p) + " maps to invalid lane " +
                  std::to_string(lane));
    }
    if (lane >= 0) ++sources[lane];
  }
  for (int l = 0; l < kNumLanes; ++l) {
    if (sources[l] == 0) {
      throw Error("merge map: lane " + lane_names()[l] + " has no source pitch");
    }
  }
}

PercussionMergeMap PercussionMergeMap::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open merge map " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedHeader("merge map " + path.string() + ": " + e.what());
  }
  PercussionMergeMap m;
  const auto& names = lane_names();
  for (auto& [lane_name, pitches] : j.at("lanes").items()) {
    auto it = std::find(names.begin(), names.end(), lane_name);
    if (it == names.end()) throw Error("merge map: unknown lane " + lane_name);
    const int lane = static_cast<int>(it - names.begin());
    for (const auto& p : pitches) {
      int pitch = p.get<int>();
      if (pitch < 0 || pitch >= kMidiPitches) {
        throw Error("merge map: pitch " + std::to_string(pitch) + " out of range");
      }
      if (m.lane_of[pitch] != -1) {
        throw Error("merge map: pitch " + std::to_string(pitch) + " mapped twice");
      }
      m.lane_of[pitch] = static_cast<int8_t>(lane);
    }
  }
  m.validate();
  return m;
}

void PercussionMergeMap::to_json_file(const std::filesystem::path& path) const {
  nlohmann::json lanes = nlohmann::json::object();
  for (int l = 0; l < kNumLanes; ++l) {
    nlohmann::json pitches = nlohmann::json::array();
    for (int p = 0; p < kMidiPitches; ++p) {
      if (lane_of[p] == l) pitches.push_back(p);
    }
    lanes[lane_names()[l]] = pitches;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot write merge map " + path.string());
  out << nlohmann::json{{"lanes", lanes}}.dump(2) << '\n';
}

namespace {

bool bar_is_silent(const MultiTrackPianoroll& song, int bar) {
  const int len = song.bar_len();
  const int t0 = bar * len;
  auto all_zero = [&](const ByteGrid& g) {
    const uint8_t* p = g.row(t0);
    return std::all_of(p, p + static_cast<size_t>(len) * g.cols, [](uint8_t v) { return v == 0; });
  };
  for (const auto& t : song.melodic) {
    if (!all_zero(t)) return false;
  }
  return all_zero(song.percussion);
}

ByteGrid slice_rows(const ByteGrid& g, int r0, int r1) {
  ByteGrid out(r1 - r0, g.cols);
  std::copy(g.row(r0), g.row(r0) + static_cast<size_t>(r1 - r0) * g.cols, out.data.begin());
  return out;
}

}  // namespace

MultiTrackPianoroll pad_to_whole_bars(const MultiTrackPianoroll& song) {
  const int len = song.bar_len();
  const int rem = song.timesteps() % len;
  if (rem == 0) return song;
  const int target = song.timesteps() + (len - rem);
  MultiTrackPianoroll out = song;
  auto pad = [&](ByteGrid& g) {
    g.data.resize(static_cast<size_t>(target) * g.cols, 0);
    g.rows = target;
  };
  for (auto& t : out.melodic) pad(t);
  pad(out.percussion);
  return out;
}

MultiTrackPianoroll trim_silence(const MultiTrackPianoroll& song_in) {
  MultiTrackPianoroll song = pad_to_whole_bars(song_in);
  const int bars = song.bars();
  int first = 0;
  while (first < bars && bar_is_silent(song, first)) ++first;
  if (first == bars) throw EmptySong("song is entirely silent");
  int last = bars - 1;
  while (last > first && bar_is_silent(song, last)) --last;

  const int len = song.bar_len();
  MultiTrackPianoroll out;
  out.resolution = song.resolution;
  for (int i = 0; i < kNumMelodic; ++i) {
    out.melodic[i] = slice_rows(song.melodic[i], first * len, (last + 1) * len);
  }
  out.percussion = slice_rows(song.percussion, first * len, (last + 1) * len);
  return out;
}

MultiTrackPianoroll resample_to_8(const MultiTrackPianoroll& song) {
  if (song.resolution != kRawResolution) {
    throw BadResolution("expected resolution 24, got " + std::to_string(song.resolution));
  }
  const int factor = kRawResolution / kGridResolution;  // 3
  auto resample = [&](const ByteGrid& g) {
    ByteGrid out(g.rows / factor, g.cols);
    for (int r = 0; r < out.rows; ++r) {
      for (int s = 0; s < factor; ++s) {
        const uint8_t* src = g.row(r * factor + s);
        uint8_t* dst = out.row(r);
        for (int c = 0; c < g.cols; ++c) dst[c] = std::max(dst[c], src[c]);
      }
    }
    return out;
  };
  MultiTrackPianoroll out;
  out.resolution = kGridResolution;
  for (int i = 0; i < kNumMelodic; ++i) out.melodic[i] = resample(song.melodic[i]);
  out.percussion = resample(song.percussion);
  return out;
}

MultiTrackPianoroll crop_pitches(const MultiTrackPianoroll& song) {
  MultiTrackPianoroll out;
  out.resolution = song.resolution;
  out.percussion = song.percussion;
  for (int i = 0; i < kNumMelodic; ++i) {
    const ByteGrid& g = song.melodic[i];
    ByteGrid c(g.rows, kMelodicPitches);
    for (int r = 0; r < g.rows; ++r) {
      std::copy(g.row(r) + kPitchLo, g.row(r) + kPitchHi + 1, c.row(r));
    }
    out.melodic[i] = std::move(c);
  }
  return out;
}

ByteGrid merge_percussion(const MultiTrackPianoroll& song, const PercussionMergeMap& map) {
  const ByteGrid& g = song.percussion;
  ByteGrid out(g.rows, kNumLanes);
  for (int r = 0; r < g.rows; ++r) {
    const uint8_t* src = g.row(r);
    uint8_t* dst = out.row(r);
    for (int p = 0; p < g.cols && p < kMidiPitches; ++p) {
      const int8_t lane = map.lane_of[p];
      if (lane >= 0) dst[lane] = std::max(dst[lane], src[p]);
    }
  }
  return out;
}

ByteGrid binarize(const ByteGrid& grid) {
  ByteGrid out(grid.rows, grid.cols);
  for (size_t i = 0; i < grid.data.size(); ++i) out.data[i] = grid.data[i] > 0 ? 1 : 0;
  return out;
}

ProcessedSong preprocess_song(const MultiTrackPianoroll& song, const PercussionMergeMap& map,
                              std::string song_id) {
  MultiTrackPianoroll s = trim_silence(song);
  s = resample_to_8(s);
  s = crop_pitches(s);
  ProcessedSong out;
  out.percussion = binarize(merge_percussion(s, map));
  out.melodic = std::move(s.melodic);
  out.song_id = std::move(song_id);
  return out;
}

FloatGrid ma_features(const ProcessedSong& song) {
  const int t_total = song.timesteps();
  FloatGrid feats(t_total, kMaFeatureDim);
  for (int t = 0; t < t_total; ++t) {
    float* row = feats.row(t);
    for (int i = 0; i < kNumMelodic; ++i) {
      const uint8_t* src = song.melodic[i].row(t);
      float* block = row + i * kMaBlockDim;
      bool any = false;
      for (int p = 0; p < kMelodicPitches; ++p) {
        block[1 + p] = static_cast<float>(src[p]) / static_cast<float>(kMaxVelocity);
        any = any || src[p] != 0;
      }
      block[0] = any ? 0.f : 1.f;
    }
  }
  return feats;
}

SongFeatures song_features(const ProcessedSong& song) {
  SongFeatures out;
  out.ma = ma_features(song);
  out.pa = song.percussion;
  out.song_id = song.song_id;
  return out;
}

std::vector<SamplePair> segment_11_bars(const ProcessedSong& song) {
  const int segments = song.bars() / kSampleBars;
  const FloatGrid feats = ma_features(song);
  std::vector<SamplePair> out;
  out.reserve(segments);
  for (int s = 0; s < segments; ++s) {
    SamplePair pair;
    pair.song_id = song.song_id;
    pair.segment_index = s;
    const int t0 = s * kSampleTimesteps;
    std::copy(feats.row(t0), feats.row(t0) + static_cast<size_t>(kSampleTimesteps) * kMaFeatureDim,
              pair.ma.features.data.begin());
    std::copy(song.percussion.row(t0),
              song.percussion.row(t0) + static_cast<size_t>(kSampleTimesteps) * kNumLanes,
              pair.pa.grid.data.begin());
    out.push_back(std::move(pair));
  }
  return out;
}

SongFeatures concat_pairs(const std::vector<SamplePair>& pairs) {
  if (pairs.empty()) throw EmptyInput("no sample pairs to concatenate");
  SongFeatures out;
  out.song_id = pairs.front().song_id;
  const int t_total = static_cast<int>(pairs.size()) * kSampleTimesteps;
  out.ma = FloatGrid(t_total, kMaFeatureDim);
  out.pa = ByteGrid(t_total, kNumLanes);
  for (size_t s = 0; s < pairs.size(); ++s) {
    const int t0 = static_cast<int>(s) * kSampleTimesteps;
    std::copy(pairs[s].ma.features.data.begin(), pairs[s].ma.features.data.end(),
              out.ma.row(t0));
    std::copy(pairs[s].pa.grid.data.begin(), pairs[s].pa.grid.data.end(), out.pa.row(t0));
  }
  return out;
}

MASample ma_window(const FloatGrid& ma, int center_bar) {
  const int bars = ma.rows / kBarTimesteps;
  if (center_bar < kSampleBars / 2 || center_bar > bars - 1 - kSampleBars / 2) {
    throw IndexOutOfRange("window center " + std::to_string(center_bar) +
                          " lacks 5 bars of context");
  }
  MASample out;
  const int t0 = (center_bar - kSampleBars / 2) * kBarTimesteps;
  std::copy(ma.row(t0), ma.row(t0) + static_cast<size_t>(kSampleTimesteps) * kMaFeatureDim,
            out.features.data.begin());
  return out;
}

PASample pa_window(const ByteGrid& pa, int center_bar) {
  const int bars = pa.rows / kBarTimesteps;
  if (center_bar < kSampleBars / 2 || center_bar > bars - 1 - kSampleBars / 2) {
    throw IndexOutOfRange("window center " + std::to_string(center_bar) +
                          " lacks 5 bars of context");
  }
  PASample out;
  const int t0 = (center_bar - kSampleBars / 2) * kBarTimesteps;
  std::copy(pa.row(t0), pa.row(t0) + static_cast<size_t>(kSampleTimesteps) * kNumLanes,
            out.grid.data.begin());
  return out;
}

const std::array<int, kNumLanes>& canonical_lane_pitches() {
  static const std::array<int, kNumLanes> pitches = {38, 46, 42, 36, 51, 49, 41, 43,
                                                     50, 48, 45, 56, 44, 54, 69, 70};
  return pitches;
}

MultiTrackPianoroll percussion_only_song(const ByteGrid& pa) {
  MultiTrackPianoroll song;
  song.resolution = kGridResolution;
  for (auto& t : song.melodic) t = ByteGrid(pa.rows, kMidiPitches);
  song.percussion = ByteGrid(pa.rows, kMidiPitches);
  const auto& pitches = canonical_lane_pitches();
  for (int t = 0; t < pa.rows; ++t) {
    for (int l = 0; l < kNumLanes; ++l) {
      if (pa.at(t, l)) song.percussion.at(t, pitches[l]) = 100;
    }
  }
  return song;
}

}  // namespace drumsmith
