#include "drumsmith/models/infill.hpp"

#include <algorithm>

namespace drumsmith {

using nn::Var;

PASample mask_middle_bar(PASample pa) {
  const int t0 = (kSampleBars / 2) * kBarTimesteps;
  std::fill(pa.grid.row(t0), pa.grid.row(t0) + static_cast<size_t>(kBarTimesteps) * kNumLanes,
            uint8_t{0});
  return pa;
}

ImprovInfill::ImprovInfill(const InfillOptions& opt, uint64_t seed) : opt_(opt) {
  Rng rng(seed);
  const int d = opt.model_dim;
  ma_embed_ = nn::FeatureEmbedder<float>(rng, kMaFeatureDim, opt.embed_hidden, d);
  pa_embed_ = nn::FeatureEmbedder<float>(rng, kNumLanes, opt.embed_hidden, d);
  for (int i = 0; i < opt.enc_layers; ++i) {
    ma_enc_.emplace_back(rng, d, opt.heads, 0, opt.ff_mult * d);
    pa_enc_.emplace_back(rng, d, opt.heads, 0, opt.ff_mult * d);
  }
  ma_embed_.register_params(params_, "ma_embed");
  pa_embed_.register_params(params_, "pa_embed");
  for (int i = 0; i < opt.enc_layers; ++i) {
    ma_enc_[i].register_params(params_, "ma_enc." + std::to_string(i));
    pa_enc_[i].register_params(params_, "pa_enc." + std::to_string(i));
  }

  const int latent = 2 * d;
  const int cells = kBarTimesteps * kNumLanes;  // 512
  switch (opt.variant) {
    case InfillVariant::MLP: {
      mlp1_ = nn::Dense<float>(rng, latent, opt.mlp_hidden);
      mlp2_ = nn::Dense<float>(rng, opt.mlp_hidden, opt.mlp_hidden);
      mlp3_ = nn::Dense<float>(rng, opt.mlp_hidden, cells);
      mlp1_.register_params(params_, "mlp.0");
      mlp2_.register_params(params_, "mlp.1");
      mlp3_.register_params(params_, "mlp.2");
      break;
    }
    case InfillVariant::MLPMixer: {
      mixer_expand_ = nn::Dense<float>(rng, latent, kBarTimesteps * latent);
      for (int i = 0; i < opt.mixer_blocks; ++i) {
        MixerBlock b;
        b.ln_token = nn::LayerNorm<float>(latent);
        b.ln_channel = nn::LayerNorm<float>(latent);
        b.token_lift = nn::Dense<float>(rng, kBarTimesteps, opt.mixer_token_hidden);
        b.token_lower = nn::Dense<float>(rng, opt.mixer_token_hidden, kBarTimesteps);
        b.channel_lift = nn::Dense<float>(rng, latent, opt.mixer_channel_hidden);
        b.channel_lower = nn::Dense<float>(rng, opt.mixer_channel_hidden, latent);
        mixer_blocks_.push_back(std::move(b));
      }
      mixer_out_ = nn::Dense<float>(rng, latent, kNumLanes);
      mixer_expand_.register_params(params_, "mixer.expand");
      for (int i = 0; i < opt.mixer_blocks; ++i) {
        const std::string p = "mixer." + std::to_string(i);
        mixer_blocks_[i].ln_token.register_params(params_, p + ".ln_token");
        mixer_blocks_[i].token_lift.register_params(params_, p + ".token_lift");
        mixer_blocks_[i].token_lower.register_params(params_, p + ".token_lower");
        mixer_blocks_[i].ln_channel.register_params(params_, p + ".ln_channel");
        mixer_blocks_[i].channel_lift.register_params(params_, p + ".channel_lift");
        mixer_blocks_[i].channel_lower.register_params(params_, p + ".channel_lower");
      }
      mixer_out_.register_params(params_, "mixer.out");
      break;
    }
    case InfillVariant::Conv1D: {
      if (latent % 4 != 0) throw ShapeMismatch("conv decoder needs latent divisible by 4");
      const int in_ch = latent / 4;
      const int ch = opt.conv_channels;
      auto make_conv = [&](int cin, int cout) {
        conv_w_.push_back(nn::make_param<float>(rng, {3, cin, cout}, 3 * cin));
        conv_b_.push_back(nn::make_const_param<float>({cout}, 0.f));
      };
      // three blocks of two convolutions, each followed by 2x upsampling:
      // length 4 -> 8 -> 16 -> 32
      make_conv(in_ch, ch);
      make_conv(ch, ch);
      for (int i = 1; i < 3; ++i) {
        make_conv(ch, ch);
        make_conv(ch, ch);
      }
      conv_out_ = nn::Dense<float>(rng, ch, kNumLanes);
      for (size_t i = 0; i < conv_w_.size(); ++i) {
        params_.add("conv." + std::to_string(i) + ".weight", conv_w_[i]);
        params_.add("conv." + std::to_string(i) + ".bias", conv_b_[i]);
      }
      conv_out_.register_params(params_, "conv.out");
      break;
    }
  }
}

Var<float> ImprovInfill::decode_mlp(const Var<float>& latent) const {
  Var<float> h = nn::relu(mlp1_(latent));
  h = nn::relu(mlp2_(h));
  Var<float> flat = nn::sigmoid(mlp3_(h));  // [B, 512]
  return nn::reshape(flat, {latent.dim(0), kBarTimesteps, kNumLanes});
}

Var<float> ImprovInfill::decode_mixer(const Var<float>& latent) const {
  const int b_n = latent.dim(0);
  const int width = 2 * opt_.model_dim;
  Var<float> x = nn::reshape(mixer_expand_(latent), {b_n, kBarTimesteps, width});
  for (const auto& blk : mixer_blocks_) {
    // token mixing over the 32 positions
    Var<float> t = nn::transpose_12(blk.ln_token(x));  // [B, width, 32]
    t = blk.token_lower(nn::relu(blk.token_lift(t)));
    x = nn::add(x, nn::transpose_12(t));
    // channel mixing
    Var<float> c = blk.channel_lower(nn::relu(blk.channel_lift(blk.ln_channel(x))));
    x = nn::add(x, c);
  }
  return nn::sigmoid(mixer_out_(x));  // [B, 32, 16]
}

Var<float> ImprovInfill::decode_conv(const Var<float>& latent) const {
  const int b_n = latent.dim(0);
  const int in_ch = (2 * opt_.model_dim) / 4;
  Var<float> x = nn::reshape(latent, {b_n, 4, in_ch});
  for (int blk = 0; blk < 3; ++blk) {
    x = nn::relu(nn::conv1d_same(x, conv_w_[2 * blk], conv_b_[2 * blk]));
    x = nn::relu(nn::conv1d_same(x, conv_w_[2 * blk + 1], conv_b_[2 * blk + 1]));
    x = nn::upsample2_time(x);
  }
  return nn::sigmoid(conv_out_(x));  // [B, 32, 16]
}

Var<float> ImprovInfill::forward(std::span<const MASample> mas,
                                 std::span<const PASample> masked_pas) const {
  if (mas.size() != masked_pas.size()) throw ShapeMismatch("MA/PA batch size mismatch");
  Var<float> ma = ma_embed_(ma_to_var(mas));
  Var<float> ma_h = ma;
  for (const auto& block : ma_enc_) ma_h = block(ma_h);
  ma_h = nn::add(ma_h, ma);  // stack-level skip
  Var<float> pa = pa_embed_(pa_to_var(masked_pas));
  Var<float> pa_h = pa;
  for (const auto& block : pa_enc_) pa_h = block(pa_h);
  pa_h = nn::add(pa_h, pa);
  Var<float> latent = nn::concat_last(nn::mean_axis1(ma_h), nn::mean_axis1(pa_h));  // [B, 256]
  switch (opt_.variant) {
    case InfillVariant::MLP: return decode_mlp(latent);
    case InfillVariant::MLPMixer: return decode_mixer(latent);
    case InfillVariant::Conv1D: return decode_conv(latent);
  }
  throw UnknownVariant("bad infill variant value");
}

Bar ImprovInfill::predict_bar(const MASample& ma, const PASample& masked_pa,
                              double threshold) const {
  nn::NoGradGuard ng;
  Var<float> probs = forward(std::span<const MASample>(&ma, 1),
                             std::span<const PASample>(&masked_pa, 1));
  Bar bar;
  for (int t = 0; t < kBarTimesteps; ++t) {
    for (int l = 0; l < kNumLanes; ++l) {
      bar.grid.at(t, l) = probs.value()[static_cast<size_t>(t) * kNumLanes + l] > threshold;
    }
  }
  return bar;
}

}  // namespace drumsmith
