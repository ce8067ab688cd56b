#pragma once

#include <stdexcept>
#include <string>

namespace drumsmith {

// Base class for all library errors. CLI maps these to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Container / file errors
struct MalformedHeader : Error { using Error::Error; };
struct TrackLengthMismatch : Error { using Error::Error; };
struct VelocityOutOfRange : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };

// Preprocessing
struct EmptySong : Error { using Error::Error; };
struct BadResolution : Error { using Error::Error; };

// Indexing / shapes
struct IndexOutOfRange : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct BinMismatch : Error { using Error::Error; };

// Tokenizer
struct TooManyShifts : Error { using Error::Error; };
struct TokenOutOfRange : Error { using Error::Error; };

// Novelty / datasets
struct SongTooShort : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };

// Models
struct BadHeadCount : Error { using Error::Error; };
struct UnknownVariant : Error { using Error::Error; };
struct CheckpointMismatch : Error { using Error::Error; };

}  // namespace drumsmith
