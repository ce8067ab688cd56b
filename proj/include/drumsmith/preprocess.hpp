#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drumsmith/pianoroll.hpp"

namespace drumsmith {

// MIDI pitch -> percussion lane (0-15) or discard (-1).
struct PercussionMergeMap {
  std::array<int8_t, kMidiPitches> lane_of;

  PercussionMergeMap() { lane_of.fill(-1); }

  // General-MIDI pitch families onto the 16 canonical lanes. The map is
  // data, not ground truth; override via from_json_file.
  static PercussionMergeMap defaults();

  static PercussionMergeMap from_json_file(const std::filesystem::path& path);
  void to_json_file(const std::filesystem::path& path) const;

  // every lane must have at least one source pitch
  void validate() const;
};

// Aligned 11-bar melodic/percussion pair cut from one song.
struct SamplePair {
  MASample ma;
  PASample pa;
  std::string song_id;
  int segment_index = 0;
};

// Song after preprocessing steps i-vi: resolution 8, melodic tracks cropped
// to 63 pitches, percussion merged to 16 binary lanes.
struct ProcessedSong {
  std::array<ByteGrid, kNumMelodic> melodic;  // T x 63 velocities
  ByteGrid percussion;                        // T x 16 binary
  std::string song_id;

  int timesteps() const { return percussion.rows; }
  int bars() const { return timesteps() / kBarTimesteps; }
};

// Melodic + percussion feature matrices for a whole (or reassembled) song;
// the windowed view the location/infill models consume.
struct SongFeatures {
  FloatGrid ma;    // T x 256
  ByteGrid pa;     // T x 16 binary
  std::string song_id;

  int timesteps() const { return pa.rows; }
  int bars() const { return timesteps() / kBarTimesteps; }
};

// Step (i): drop leading/trailing all-silent whole bars. Throws EmptySong.
MultiTrackPianoroll trim_silence(const MultiTrackPianoroll& song);

// Step (ii): 24 -> 8 timesteps per beat; each output cell is the max of its
// 3 source cells so no onset is lost. Throws BadResolution.
MultiTrackPianoroll resample_to_8(const MultiTrackPianoroll& song);

// Step (iii): melodic tracks keep MIDI 21-83 only (63 rows); percussion
// untouched.
MultiTrackPianoroll crop_pitches(const MultiTrackPianoroll& song);

// Steps (iv)-(v): fold percussion pitches into 16 lanes (max velocity on
// collision); unmapped pitches vanish.
ByteGrid merge_percussion(const MultiTrackPianoroll& song, const PercussionMergeMap& map);

// Step (vi): entry 1 iff velocity > 0.
ByteGrid binarize(const ByteGrid& grid);

// Partial trailing bar is zero-padded to a whole bar.
MultiTrackPianoroll pad_to_whole_bars(const MultiTrackPianoroll& song);

// Steps i-vi in order (with padding first).
ProcessedSong preprocess_song(const MultiTrackPianoroll& song, const PercussionMergeMap& map,
                              std::string song_id);

// Step (vii): non-overlapping contiguous 11-bar windows; trailing remainder
// discarded. Empty result if the song has fewer than 11 bars.
std::vector<SamplePair> segment_11_bars(const ProcessedSong& song);

// Full-song 256-dim feature rows (silence bits + velocities/127).
FloatGrid ma_features(const ProcessedSong& song);

SongFeatures song_features(const ProcessedSong& song);

// Reassemble contiguous segments into full-song feature matrices. Pairs must
// be consecutive segments of one song.
SongFeatures concat_pairs(const std::vector<SamplePair>& pairs);

// 11-bar MA window centered on center_bar (needs 5 bars of context each side).
MASample ma_window(const FloatGrid& ma, int center_bar);

// 11-bar PA window centered on center_bar.
PASample pa_window(const ByteGrid& pa, int center_bar);

// Representative GM pitch per lane, used when writing generated percussion
// back into the DRPR container.
const std::array<int, kNumLanes>& canonical_lane_pitches();

// Wrap a generated percussion grid (T x 16, binary) as a percussion-only
// song at grid resolution: melodic tracks silent, strokes written at the
// canonical pitch with a fixed audible velocity.
MultiTrackPianoroll percussion_only_song(const ByteGrid& pa);

}  // namespace drumsmith
