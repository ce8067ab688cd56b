#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "drumsmith/tokenizer.hpp"
#include "helpers.hpp"

using namespace drumsmith;
using drumsmith::testing::random_pa;

TEST_CASE("all-zero sample encodes to 352 x [SILENCE, SHIFT]") {
  PASample pa;
  TokenSeq seq = encode(pa);
  REQUIRE(seq.ids.size() == 2 * kSampleTimesteps);
  for (int t = 0; t < kSampleTimesteps; ++t) {
    CHECK(seq.ids[2 * t] == tokens::kSilence);
    CHECK(seq.ids[2 * t + 1] == tokens::kShift);
  }
}

TEST_CASE("instrument tokens come out in ascending lane order") {
  PASample pa;
  pa.grid.at(0, kKick) = 1;   // lane 3
  pa.grid.at(0, kSnare) = 1;  // lane 0
  TokenSeq seq = encode(pa);
  CHECK(seq.ids[0] == kSnare);
  CHECK(seq.ids[1] == kKick);
  CHECK(seq.ids[2] == tokens::kShift);
}

TEST_CASE("encode emits exactly 352 SHIFTs and canonical timesteps") {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    TokenSeq seq = encode(random_pa(rng));
    int shifts = 0;
    int prev_instrument = -1;
    bool saw_silence = false, saw_instrument = false;
    for (int id : seq.ids) {
      if (id == tokens::kShift) {
        // SILENCE appears iff no instrument token did
        REQUIRE(saw_silence != saw_instrument);
        ++shifts;
        prev_instrument = -1;
        saw_silence = saw_instrument = false;
      } else if (id == tokens::kSilence) {
        saw_silence = true;
      } else {
        REQUIRE(id > prev_instrument);  // strictly increasing, no repeats
        prev_instrument = id;
        saw_instrument = true;
      }
    }
    REQUIRE(shifts == kSampleTimesteps);
  }
}

TEST_CASE("decode inverts encode on 1000 random samples") {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    PASample pa = random_pa(rng, rng.uniform() * 0.3);
    REQUIRE(decode(encode(pa)) == pa);
  }
}

TEST_CASE("decode is permissive") {
  SUBCASE("duplicate instrument tokens are idempotent") {
    std::vector<int> ids{0, 0, tokens::kShift};
    PASample pa = decode(ids);
    CHECK(pa.grid.at(0, 0) == 1);
    CHECK(bar_l1_norm(slice_bar(pa, 0)) == 1);
  }

  SUBCASE("SILENCE alongside instruments is ignored") {
    std::vector<int> ids{tokens::kSilence, 3, tokens::kShift};
    PASample pa = decode(ids);
    CHECK(pa.grid.at(0, 3) == 1);
  }

  SUBCASE("unsorted tokens still land") {
    std::vector<int> ids{5, 2, tokens::kShift};
    PASample pa = decode(ids);
    CHECK(pa.grid.at(0, 2) == 1);
    CHECK(pa.grid.at(0, 5) == 1);
  }

  SUBCASE("early stop zero-fills the tail") {
    std::vector<int> ids{0, tokens::kShift, 1, tokens::kShift};
    PASample pa = decode(ids);
    CHECK(pa.grid.at(0, 0) == 1);
    CHECK(pa.grid.at(1, 1) == 1);
    for (int t = 2; t < kSampleTimesteps; ++t) {
      for (int l = 0; l < kNumLanes; ++l) REQUIRE(pa.grid.at(t, l) == 0);
    }
  }

  SUBCASE("353 SHIFTs throw") {
    std::vector<int> ids(353, tokens::kShift);
    CHECK_THROWS_AS(decode(ids), TooManyShifts);
  }

  SUBCASE("out-of-range id throws") {
    std::vector<int> ids{18};
    CHECK_THROWS_AS(decode(ids), TokenOutOfRange);
    ids[0] = -1;
    CHECK_THROWS_AS(decode(ids), TokenOutOfRange);
  }
}

TEST_CASE("fuzzed decode never crashes") {
  Rng rng(3);
  int ok = 0, overflow = 0;
  for (int i = 0; i < 2000; ++i) {
    const size_t len = rng.uniform_int(9000);  // mean SHIFT count crosses 352 near 6350
    std::vector<int> ids(len);
    for (auto& id : ids) id = static_cast<int>(rng.uniform_int(tokens::kVocabSize));
    try {
      PASample pa = decode(ids);
      pa.validate();
      ++ok;
    } catch (const TooManyShifts&) {
      ++overflow;  // the one declared failure mode
    }
  }
  CHECK(ok + overflow == 2000);
  CHECK(ok > 0);
  CHECK(overflow > 0);
}

TEST_CASE("vocabulary table") {
  CHECK(tokens::token_name(0) == "snare");
  CHECK(tokens::token_name(tokens::kSilence) == "SILENCE");
  CHECK(tokens::token_name(tokens::kShift) == "SHIFT");
  CHECK_THROWS_AS(tokens::token_name(18), TokenOutOfRange);

  const auto j = nlohmann::json::parse(tokens::vocab_json());
  CHECK(j["vocab_size"] == 18);
  CHECK(j["tokens"].size() == 18);
  CHECK(j["tokens"][15]["name"] == "maracas");
}
