#pragma once

#include <span>
#include <string>
#include <vector>

#include "drumsmith/pianoroll.hpp"

namespace drumsmith {

// Serialized-grid vocabulary: 16 instrument tokens (lane order), SILENCE, SHIFT.
namespace tokens {
inline constexpr int kVocabSize = 18;
inline constexpr int kSilence = 16;
inline constexpr int kShift = 17;

std::string token_name(int id);  // throws TokenOutOfRange
std::string vocab_json();        // id -> name table, for docs and `tokens --dump`
}  // namespace tokens

struct TokenSeq {
  std::vector<int> ids;

  bool operator==(const TokenSeq&) const = default;
};

// Canonical form: per timestep, active lanes ascending (or SILENCE when the
// timestep is empty), then SHIFT; 352 SHIFTs total.
TokenSeq encode(const PASample& pa);

// Permissive inverse: duplicate instrument tokens are idempotent, SILENCE is
// ignored for grid content, missing trailing timesteps are zero-filled.
// Throws TooManyShifts if the stream has more than 352 SHIFTs, and
// TokenOutOfRange for ids outside [0, 18).
PASample decode(std::span<const int> ids);
PASample decode(const TokenSeq& seq);

}  // namespace drumsmith
