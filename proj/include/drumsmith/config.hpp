#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "drumsmith/augment.hpp"
#include "drumsmith/novelty.hpp"

namespace drumsmith {

struct TrainOptions {
  int epochs = 300;
  int batch_size = 4;
  double lr_start = 1e-4;
  double lr_end = 1e-6;
  double val_fraction = 0.2;
  double huber_delta = 1.0;
  bool augment = true;
  // stop once the metric reaches the bound (0 disables); epochs remains the
  // hard budget
  double early_stop_val_accuracy = 0.0;
  double early_stop_train_accuracy = 0.0;
  double early_stop_train_f1 = 0.0;
};

struct BasicGenOptions {
  int enc_layers = 2;
  int dec_layers = 2;
  int model_dim = 128;
  int heads = 8;
  int vocab = 18;
  int embed_hidden = 1024;
  int ff_mult = 4;
  bool zero_init_output = false;
};

struct LocatorOptions {
  int enc_layers = 2;
  int model_dim = 64;
  int heads = 12;
  int head_dim = 6;  // 12 heads of 6 dims, output projected 72 -> 64
  int hidden = 1024;
  int embed_hidden = 1024;
  int embed_dim = 128;
  int ff_mult = 4;
};

enum class InfillVariant { MLP, MLPMixer, Conv1D };

InfillVariant infill_variant_from_string(const std::string& name);  // throws UnknownVariant
std::string to_string(InfillVariant v);

struct InfillOptions {
  int enc_layers = 2;
  int model_dim = 128;
  int heads = 8;
  int embed_hidden = 1024;
  int ff_mult = 4;
  InfillVariant variant = InfillVariant::MLP;
  // MLP decoder: 2048-2048-512 with sigmoid output
  int mlp_hidden = 2048;
  // mixer decoder
  int mixer_blocks = 4;
  int mixer_token_hidden = 64;
  int mixer_channel_hidden = 512;
  // conv decoder: latent reshaped to 4 x 64, three upsampling blocks
  int conv_channels = 64;
};

struct FilterOptions {
  int max_silent_bars = 4;               // more than this many silent bars drops the sample
  double density_std_threshold = 0.05;   // per-bar density standard deviation cap
};

struct PipelineOptions {
  std::string strategy = "sample";  // or "greedy"
  double locator_threshold = 0.5;
  double infill_threshold = 0.5;
  int max_tokens = 6000;
};

struct AppConfig {
  AugmentConfig augment;
  LocationDatasetOptions novelty;
  TrainOptions train;
  BasicGenOptions basic;
  LocatorOptions locator;
  InfillOptions infill;
  FilterOptions filter;
  PipelineOptions pipeline;
  uint64_t seed = 7;

  nlohmann::json to_json() const;
  static AppConfig from_json(const nlohmann::json& j);  // unknown keys rejected
  static AppConfig load_file(const std::filesystem::path& path);

  // FNV-1a over the canonical (sorted-key) serialization
  uint64_t hash() const;
};

uint64_t fnv1a64(const std::string& bytes);

}  // namespace drumsmith
