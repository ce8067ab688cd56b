#include "drumsmith/tokenizer.hpp"

#include <nlohmann/json.hpp>

namespace drumsmith {

namespace tokens {

std::string token_name(int id) {
  if (id >= 0 && id < kNumLanes) return lane_names()[id];
  if (id == kSilence) return "SILENCE";
  if (id == kShift) return "SHIFT";
  throw TokenOutOfRange("token id " + std::to_string(id));
}

std::string vocab_json() {
  nlohmann::json j;
  j["vocab_size"] = kVocabSize;
  nlohmann::json table = nlohmann::json::array();
  for (int id = 0; id < kVocabSize; ++id) {
    table.push_back({{"id", id}, {"name", token_name(id)}});
  }
  j["tokens"] = table;
  return j.dump(2);
}

}  // namespace tokens

TokenSeq encode(const PASample& pa) {
  pa.validate();
  TokenSeq seq;
  seq.ids.reserve(kSampleTimesteps * 2);
  for (int t = 0; t < kSampleTimesteps; ++t) {
    const uint8_t* row = pa.grid.row(t);
    bool any = false;
    for (int lane = 0; lane < kNumLanes; ++lane) {
      if (row[lane]) {
        seq.ids.push_back(lane);
        any = true;
      }
    }
    if (!any) seq.ids.push_back(tokens::kSilence);
    seq.ids.push_back(tokens::kShift);
  }
  return seq;
}

PASample decode(std::span<const int> ids) {
  PASample pa;
  int t = 0;
  for (int id : ids) {
    if (id < 0 || id >= tokens::kVocabSize) {
      throw TokenOutOfRange("token id " + std::to_string(id));
    }
    if (id == tokens::kShift) {
      ++t;
      if (t > kSampleTimesteps) throw TooManyShifts("more than 352 SHIFT tokens");
    } else if (id < kNumLanes && t < kSampleTimesteps) {
      pa.grid.at(t, id) = 1;
    }
    // SILENCE carries no grid content
  }
  return pa;
}

PASample decode(const TokenSeq& seq) { return decode(std::span<const int>(seq.ids)); }

}  // namespace drumsmith
