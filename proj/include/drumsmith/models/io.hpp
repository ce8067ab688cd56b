#pragma once

// Checkpoint save/load that embeds the model options, so a checkpoint is
// self-describing and can be reopened without the original config file.

#include <filesystem>
#include <memory>

#include "drumsmith/models/basic_gen.hpp"
#include "drumsmith/models/infill.hpp"
#include "drumsmith/models/locator.hpp"
#include "drumsmith/nn/checkpoint.hpp"

namespace drumsmith {

nlohmann::json options_json(const BasicGenOptions& o);
nlohmann::json options_json(const LocatorOptions& o);
nlohmann::json options_json(const InfillOptions& o);
BasicGenOptions basic_options_from_json(const nlohmann::json& j);
LocatorOptions locator_options_from_json(const nlohmann::json& j);
InfillOptions infill_options_from_json(const nlohmann::json& j);

void save_basic(const std::filesystem::path& path, BasicDrumGen& model,
                nn::CheckpointMeta meta);
void save_locator(const std::filesystem::path& path, ImprovLocator& model,
                  nn::CheckpointMeta meta);
void save_infill(const std::filesystem::path& path, ImprovInfill& model,
                 nn::CheckpointMeta meta);

// Construct from the options stored in the checkpoint, then load weights.
// Throws CheckpointMismatch when the file holds a different model kind.
std::unique_ptr<BasicDrumGen> load_basic(const std::filesystem::path& path);
std::unique_ptr<ImprovLocator> load_locator(const std::filesystem::path& path);
std::unique_ptr<ImprovInfill> load_infill(const std::filesystem::path& path);

}  // namespace drumsmith
