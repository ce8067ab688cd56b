#pragma once

// On-disk formats for preprocessed data. All little-endian; see
// docs/formats.md.
//   DRSP: the 11-bar (MA, PA) sample pairs of one song, in segment order.
//   DRLD: improvisation-location dataset (labeled MA windows).

#include <filesystem>
#include <vector>

#include "drumsmith/novelty.hpp"
#include "drumsmith/preprocess.hpp"

namespace drumsmith {

void save_pairs(const std::vector<SamplePair>& pairs, const std::filesystem::path& path);
std::vector<SamplePair> load_pairs(const std::filesystem::path& path);

void save_location_dataset(const LocationDataset& ds, const std::filesystem::path& path);
LocationDataset load_location_dataset(const std::filesystem::path& path);

// All .drsp files under dir, sorted by filename for determinism.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              const std::string& extension);

}  // namespace drumsmith
