#include "drumsmith/models/io.hpp"

namespace drumsmith {

nlohmann::json options_json(const BasicGenOptions& o) {
  return {{"enc_layers", o.enc_layers}, {"dec_layers", o.dec_layers},
          {"model_dim", o.model_dim},   {"heads", o.heads},
          {"vocab", o.vocab},           {"embed_hidden", o.embed_hidden},
          {"ff_mult", o.ff_mult},       {"zero_init_output", o.zero_init_output}};
}

nlohmann::json options_json(const LocatorOptions& o) {
  return {{"enc_layers", o.enc_layers}, {"model_dim", o.model_dim},
          {"heads", o.heads},           {"head_dim", o.head_dim},
          {"hidden", o.hidden},         {"embed_hidden", o.embed_hidden},
          {"embed_dim", o.embed_dim},   {"ff_mult", o.ff_mult}};
}

nlohmann::json options_json(const InfillOptions& o) {
  return {{"enc_layers", o.enc_layers},
          {"model_dim", o.model_dim},
          {"heads", o.heads},
          {"embed_hidden", o.embed_hidden},
          {"ff_mult", o.ff_mult},
          {"variant", to_string(o.variant)},
          {"mlp_hidden", o.mlp_hidden},
          {"mixer_blocks", o.mixer_blocks},
          {"mixer_token_hidden", o.mixer_token_hidden},
          {"mixer_channel_hidden", o.mixer_channel_hidden},
          {"conv_channels", o.conv_channels}};
}

BasicGenOptions basic_options_from_json(const nlohmann::json& j) {
  BasicGenOptions o;
  o.enc_layers = j.at("enc_layers").get<int>();
  o.dec_layers = j.at("dec_layers").get<int>();
  o.model_dim = j.at("model_dim").get<int>();
  o.heads = j.at("heads").get<int>();
  o.vocab = j.at("vocab").get<int>();
  o.embed_hidden = j.at("embed_hidden").get<int>();
  o.ff_mult = j.at("ff_mult").get<int>();
  o.zero_init_output = j.at("zero_init_output").get<bool>();
  return o;
}

LocatorOptions locator_options_from_json(const nlohmann::json& j) {
  LocatorOptions o;
  o.enc_layers = j.at("enc_layers").get<int>();
  o.model_dim = j.at("model_dim").get<int>();
  o.heads = j.at("heads").get<int>();
  o.head_dim = j.at("head_dim").get<int>();
  o.hidden = j.at("hidden").get<int>();
  o.embed_hidden = j.at("embed_hidden").get<int>();
  o.embed_dim = j.at("embed_dim").get<int>();
  o.ff_mult = j.at("ff_mult").get<int>();
  return o;
}

InfillOptions infill_options_from_json(const nlohmann::json& j) {
  InfillOptions o;
  o.enc_layers = j.at("enc_layers").get<int>();
  o.model_dim = j.at("model_dim").get<int>();
  o.heads = j.at("heads").get<int>();
  o.embed_hidden = j.at("embed_hidden").get<int>();
  o.ff_mult = j.at("ff_mult").get<int>();
  o.variant = infill_variant_from_string(j.at("variant").get<std::string>());
  o.mlp_hidden = j.at("mlp_hidden").get<int>();
  o.mixer_blocks = j.at("mixer_blocks").get<int>();
  o.mixer_token_hidden = j.at("mixer_token_hidden").get<int>();
  o.mixer_channel_hidden = j.at("mixer_channel_hidden").get<int>();
  o.conv_channels = j.at("conv_channels").get<int>();
  return o;
}

namespace {

nn::CheckpointMeta load_meta_checked(const std::filesystem::path& path,
                                     const std::string& expected_model) {
  nn::CheckpointMeta meta = nn::peek_checkpoint_model(path);
  if (meta.model != expected_model) {
    throw CheckpointMismatch(path.string() + " holds a '" + meta.model + "' model, expected '" +
                             expected_model + "'");
  }
  return meta;
}

}  // namespace

void save_basic(const std::filesystem::path& path, BasicDrumGen& model, nn::CheckpointMeta meta) {
  meta.model = "basic";
  meta.extra = options_json(model.options());
  nn::save_checkpoint(path, model.params(), meta);
}

void save_locator(const std::filesystem::path& path, ImprovLocator& model,
                  nn::CheckpointMeta meta) {
  meta.model = "locator";
  meta.extra = options_json(model.options());
  nn::save_checkpoint(path, model.params(), meta);
}

void save_infill(const std::filesystem::path& path, ImprovInfill& model,
                 nn::CheckpointMeta meta) {
  meta.model = "infill";
  meta.extra = options_json(model.options());
  nn::save_checkpoint(path, model.params(), meta);
}

std::unique_ptr<BasicDrumGen> load_basic(const std::filesystem::path& path) {
  const auto meta = load_meta_checked(path, "basic");
  auto model = std::make_unique<BasicDrumGen>(basic_options_from_json(meta.extra), meta.seed);
  nn::load_checkpoint(path, model->params());
  return model;
}

std::unique_ptr<ImprovLocator> load_locator(const std::filesystem::path& path) {
  const auto meta = load_meta_checked(path, "locator");
  auto model = std::make_unique<ImprovLocator>(locator_options_from_json(meta.extra), meta.seed);
  nn::load_checkpoint(path, model->params());
  return model;
}

std::unique_ptr<ImprovInfill> load_infill(const std::filesystem::path& path) {
  const auto meta = load_meta_checked(path, "infill");
  auto model = std::make_unique<ImprovInfill>(infill_options_from_json(meta.extra), meta.seed);
  nn::load_checkpoint(path, model->params());
  return model;
}

}  // namespace drumsmith
