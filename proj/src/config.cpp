#include "drumsmith/config.hpp"

#include <fstream>

namespace drumsmith {

InfillVariant infill_variant_from_string(const std::string& name) {
  if (name == "mlp") return InfillVariant::MLP;
  if (name == "mixer") return InfillVariant::MLPMixer;
  if (name == "conv1d") return InfillVariant::Conv1D;
  throw UnknownVariant("infill variant '" + name + "' (expected mlp|mixer|conv1d)");
}

std::string to_string(InfillVariant v) {
  switch (v) {
    case InfillVariant::MLP: return "mlp";
    case InfillVariant::MLPMixer: return "mixer";
    case InfillVariant::Conv1D: return "conv1d";
  }
  throw UnknownVariant("bad infill variant value");
}

nlohmann::json AppConfig::to_json() const {
  return nlohmann::json{
      {"seed", seed},
      {"augment",
       {{"enabled", augment.enabled},
        {"instrument_mask_frac", augment.instrument_mask_frac},
        {"timestep_mask_frac", augment.timestep_mask_frac},
        {"input_drop_frac", augment.input_drop_frac},
        {"drum_noise_max_density_delta", augment.drum_noise_max_density_delta}}},
      {"novelty",
       {{"peak_margin", novelty.peak_margin},
        {"max_positive_frac", novelty.max_positive_frac},
        {"negative_exclusion_radius", novelty.negative_exclusion_radius}}},
      {"train",
       {{"epochs", train.epochs},
        {"batch_size", train.batch_size},
        {"lr_start", train.lr_start},
        {"lr_end", train.lr_end},
        {"val_fraction", train.val_fraction},
        {"huber_delta", train.huber_delta},
        {"augment", train.augment},
        {"early_stop_val_accuracy", train.early_stop_val_accuracy},
        {"early_stop_train_accuracy", train.early_stop_train_accuracy},
        {"early_stop_train_f1", train.early_stop_train_f1}}},
      {"basic",
       {{"enc_layers", basic.enc_layers},
        {"dec_layers", basic.dec_layers},
        {"model_dim", basic.model_dim},
        {"heads", basic.heads},
        {"vocab", basic.vocab},
        {"embed_hidden", basic.embed_hidden},
        {"ff_mult", basic.ff_mult},
        {"zero_init_output", basic.zero_init_output}}},
      {"locator",
       {{"enc_layers", locator.enc_layers},
        {"model_dim", locator.model_dim},
        {"heads", locator.heads},
        {"head_dim", locator.head_dim},
        {"hidden", locator.hidden},
        {"embed_hidden", locator.embed_hidden},
        {"embed_dim", locator.embed_dim},
        {"ff_mult", locator.ff_mult}}},
      {"infill",
       {{"enc_layers", infill.enc_layers},
        {"model_dim", infill.model_dim},
        {"heads", infill.heads},
        {"embed_hidden", infill.embed_hidden},
        {"ff_mult", infill.ff_mult},
        {"variant", to_string(infill.variant)},
        {"mlp_hidden", infill.mlp_hidden},
        {"mixer_blocks", infill.mixer_blocks},
        {"mixer_token_hidden", infill.mixer_token_hidden},
        {"mixer_channel_hidden", infill.mixer_channel_hidden},
        {"conv_channels", infill.conv_channels}}},
      {"filter",
       {{"max_silent_bars", filter.max_silent_bars},
        {"density_std_threshold", filter.density_std_threshold}}},
      {"pipeline",
       {{"strategy", pipeline.strategy},
        {"locator_threshold", pipeline.locator_threshold},
        {"infill_threshold", pipeline.infill_threshold},
        {"max_tokens", pipeline.max_tokens}}}};
}

namespace {

// overlay j onto defaults, rejecting unknown keys
void merge_section(const nlohmann::json& defaults, const nlohmann::json& j,
                   const std::string& where, nlohmann::json& out) {
  out = defaults;
  for (auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) {
      throw Error("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
    if (defaults[key].is_object()) {
      merge_section(defaults[key], value, where.empty() ? key : where + "." + key, out[key]);
    } else {
      out[key] = value;
    }
  }
}

}  // namespace

AppConfig AppConfig::from_json(const nlohmann::json& j) {
  nlohmann::json merged;
  merge_section(AppConfig{}.to_json(), j, "", merged);
  AppConfig c;
  c.seed = merged["seed"].get<uint64_t>();
  const auto& a = merged["augment"];
  c.augment.enabled = a["enabled"].get<bool>();
  c.augment.instrument_mask_frac = a["instrument_mask_frac"].get<double>();
  c.augment.timestep_mask_frac = a["timestep_mask_frac"].get<double>();
  c.augment.input_drop_frac = a["input_drop_frac"].get<double>();
  c.augment.drum_noise_max_density_delta = a["drum_noise_max_density_delta"].get<double>();
  const auto& n = merged["novelty"];
  c.novelty.peak_margin = n["peak_margin"].get<double>();
  c.novelty.max_positive_frac = n["max_positive_frac"].get<double>();
  c.novelty.negative_exclusion_radius = n["negative_exclusion_radius"].get<int>();
  const auto& t = merged["train"];
  c.train.epochs = t["epochs"].get<int>();
  c.train.batch_size = t["batch_size"].get<int>();
  c.train.lr_start = t["lr_start"].get<double>();
  c.train.lr_end = t["lr_end"].get<double>();
  c.train.val_fraction = t["val_fraction"].get<double>();
  c.train.huber_delta = t["huber_delta"].get<double>();
  c.train.augment = t["augment"].get<bool>();
  c.train.early_stop_val_accuracy = t["early_stop_val_accuracy"].get<double>();
  c.train.early_stop_train_accuracy = t["early_stop_train_accuracy"].get<double>();
  c.train.early_stop_train_f1 = t["early_stop_train_f1"].get<double>();
  const auto& b = merged["basic"];
  c.basic.enc_layers = b["enc_layers"].get<int>();
  c.basic.dec_layers = b["dec_layers"].get<int>();
  c.basic.model_dim = b["model_dim"].get<int>();
  c.basic.heads = b["heads"].get<int>();
  c.basic.vocab = b["vocab"].get<int>();
  c.basic.embed_hidden = b["embed_hidden"].get<int>();
  c.basic.ff_mult = b["ff_mult"].get<int>();
  c.basic.zero_init_output = b["zero_init_output"].get<bool>();
  const auto& l = merged["locator"];
  c.locator.enc_layers = l["enc_layers"].get<int>();
  c.locator.model_dim = l["model_dim"].get<int>();
  c.locator.heads = l["heads"].get<int>();
  c.locator.head_dim = l["head_dim"].get<int>();
  c.locator.hidden = l["hidden"].get<int>();
  c.locator.embed_hidden = l["embed_hidden"].get<int>();
  c.locator.embed_dim = l["embed_dim"].get<int>();
  c.locator.ff_mult = l["ff_mult"].get<int>();
  const auto& f = merged["infill"];
  c.infill.enc_layers = f["enc_layers"].get<int>();
  c.infill.model_dim = f["model_dim"].get<int>();
  c.infill.heads = f["heads"].get<int>();
  c.infill.embed_hidden = f["embed_hidden"].get<int>();
  c.infill.ff_mult = f["ff_mult"].get<int>();
  c.infill.variant = infill_variant_from_string(f["variant"].get<std::string>());
  c.infill.mlp_hidden = f["mlp_hidden"].get<int>();
  c.infill.mixer_blocks = f["mixer_blocks"].get<int>();
  c.infill.mixer_token_hidden = f["mixer_token_hidden"].get<int>();
  c.infill.mixer_channel_hidden = f["mixer_channel_hidden"].get<int>();
  c.infill.conv_channels = f["conv_channels"].get<int>();
  const auto& fl = merged["filter"];
  c.filter.max_silent_bars = fl["max_silent_bars"].get<int>();
  c.filter.density_std_threshold = fl["density_std_threshold"].get<double>();
  const auto& p = merged["pipeline"];
  c.pipeline.strategy = p["strategy"].get<std::string>();
  if (c.pipeline.strategy != "sample" && c.pipeline.strategy != "greedy") {
    throw Error("config: pipeline.strategy must be sample or greedy");
  }
  c.pipeline.locator_threshold = p["locator_threshold"].get<double>();
  c.pipeline.infill_threshold = p["infill_threshold"].get<double>();
  c.pipeline.max_tokens = p["max_tokens"].get<int>();
  return c;
}

AppConfig AppConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

uint64_t AppConfig::hash() const { return fnv1a64(to_json().dump()); }

}  // namespace drumsmith
