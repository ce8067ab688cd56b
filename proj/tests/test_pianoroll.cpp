#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "drumsmith/pianoroll.hpp"
#include "helpers.hpp"

using namespace drumsmith;
using drumsmith::testing::random_song;
using drumsmith::testing::temp_dir;

TEST_CASE("all-silent minimal song round-trips") {
  MultiTrackPianoroll song;
  for (auto& t : song.melodic) t = ByteGrid(96, kMidiPitches);
  song.percussion = ByteGrid(96, kMidiPitches);
  const auto dir = temp_dir("pianoroll");
  const auto path = dir / "silent.drpr";
  save_song(song, path);
  MultiTrackPianoroll loaded = load_song(path);
  CHECK(loaded.resolution == kRawResolution);
  CHECK(loaded.timesteps() == 96);
  CHECK(loaded.percussion == song.percussion);
  for (int i = 0; i < kNumMelodic; ++i) CHECK(loaded.melodic[i] == song.melodic[i]);
}

TEST_CASE("save/load round-trip is the identity on 100 random songs") {
  Rng rng(42);
  const auto dir = temp_dir("pianoroll_rt");
  const auto path = dir / "song.drpr";
  for (int i = 0; i < 100; ++i) {
    MultiTrackPianoroll song = random_song(rng, 1 + static_cast<int>(rng.uniform_int(4)));
    save_song(song, path);
    MultiTrackPianoroll loaded = load_song(path);
    REQUIRE(loaded.percussion == song.percussion);
    for (int t = 0; t < kNumMelodic; ++t) REQUIRE(loaded.melodic[t] == song.melodic[t]);
    REQUIRE(loaded.resolution == song.resolution);
  }
}

TEST_CASE("loader rejects bad input") {
  const auto dir = temp_dir("pianoroll_bad");

  SUBCASE("missing file") { CHECK_THROWS_AS(load_song(dir / "nope.drpr"), IoFailure); }

  SUBCASE("bad magic") {
    const auto path = dir / "bad_magic.drpr";
    std::ofstream(path, std::ios::binary) << "XXXXjunkjunkjunk";
    CHECK_THROWS_AS(load_song(path), MalformedHeader);
  }

  SUBCASE("track length mismatch") {
    // header says 96 timesteps but first track claims a shorter length
    std::string bytes = "DRPR";
    auto put_u16 = [&](uint16_t v) {
      bytes.push_back(static_cast<char>(v & 0xFF));
      bytes.push_back(static_cast<char>(v >> 8));
    };
    auto put_u32 = [&](uint32_t v) {
      for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    put_u16(1);
    put_u32(24);
    put_u32(96);
    put_u32(95 * 128);  // wrong
    bytes.append(95 * 128, '\0');
    const auto path = dir / "short_track.drpr";
    std::ofstream(path, std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_song(path), TrackLengthMismatch);
  }

  SUBCASE("velocity out of range") {
    MultiTrackPianoroll song;
    for (auto& t : song.melodic) t = ByteGrid(96, kMidiPitches);
    song.percussion = ByteGrid(96, kMidiPitches);
    const auto path = dir / "loud.drpr";
    save_song(song, path);
    // patch one velocity byte to 200
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(4 + 2 + 4 + 4 + 4 + 10);
    f.put(static_cast<char>(200));
    f.close();
    CHECK_THROWS_AS(load_song(path), VelocityOutOfRange);
  }

  SUBCASE("save to unwritable path") {
    MultiTrackPianoroll song;
    for (auto& t : song.melodic) t = ByteGrid(96, kMidiPitches);
    song.percussion = ByteGrid(96, kMidiPitches);
    CHECK_THROWS_AS(save_song(song, dir / "no_such_dir" / "x.drpr"), IoFailure);
  }
}

TEST_CASE("bar_l1_norm counts onsets") {
  Bar bar;
  CHECK(bar_l1_norm(bar) == 0);
  for (auto& v : bar.grid.data) v = 1;
  CHECK(bar_l1_norm(bar) == kBarTimesteps * kNumLanes);  // 512

  Bar two;
  two.grid.at(0, 3) = 1;
  two.grid.at(16, 0) = 1;
  CHECK(bar_l1_norm(two) == 2);
}

TEST_CASE("bar_l1_norm matches a naive double loop on random bars") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    Bar bar = drumsmith::testing::random_bar(rng, rng.uniform());
    int naive = 0;
    for (int t = 0; t < kBarTimesteps; ++t) {
      for (int l = 0; l < kNumLanes; ++l) naive += bar.grid.at(t, l);
    }
    CHECK(bar_l1_norm(bar) == naive);
  }
}

TEST_CASE("slice_bar partitions the sample") {
  Rng rng(11);
  PASample pa = drumsmith::testing::random_pa(rng);

  SUBCASE("bar 0 of an all-zero sample is all-zero") {
    PASample zero;
    CHECK(bar_l1_norm(slice_bar(zero, 0)) == 0);
  }

  SUBCASE("index 11 is out of range") {
    CHECK_THROWS_AS(slice_bar(pa, 11), IndexOutOfRange);
    CHECK_THROWS_AS(slice_bar(pa, -1), IndexOutOfRange);
  }

  SUBCASE("concatenating the 11 slices reproduces the sample") {
    PASample rebuilt;
    for (int b = 0; b < kSampleBars; ++b) {
      Bar bar = slice_bar(pa, b);
      std::copy(bar.grid.data.begin(), bar.grid.data.end(),
                rebuilt.grid.data.begin() + static_cast<size_t>(b) * kBarTimesteps * kNumLanes);
    }
    CHECK(rebuilt == pa);
  }
}

TEST_CASE("csv dump writes one exact file per track") {
  Rng rng(3);
  MultiTrackPianoroll song = random_song(rng, 1);
  const auto dir = temp_dir("pianoroll_csv");
  dump_song_csv(song, dir);
  for (const auto& name : melodic_track_names()) {
    CHECK(std::filesystem::exists(dir / (name + ".csv")));
  }
  std::ifstream f(dir / "percussion.csv");
  std::string line;
  std::getline(f, line);
  // first row, first value must match the stored velocity exactly
  const int first = std::stoi(line.substr(0, line.find(',')));
  CHECK(first == static_cast<int>(song.percussion.at(0, 0)));
}
