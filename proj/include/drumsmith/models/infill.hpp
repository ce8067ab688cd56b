#pragma once

#include <span>
#include <vector>

#include "drumsmith/config.hpp"
#include "drumsmith/models/common.hpp"

namespace drumsmith {

// Zero out the middle bar (rows 160..191) of a window.
PASample mask_middle_bar(PASample pa);

// BERT-style in-filling: MA and masked-PA branches are embedded, encoded
// with a stack-level skip connection, summarized by global averaging,
// concatenated into a 256-dim latent code, and decoded to a sigmoid 32x16
// bar by one of three decoder variants.
class ImprovInfill {
 public:
  ImprovInfill(const InfillOptions& opt, uint64_t seed);

  // probabilities [B, 32, 16] in (0,1)
  nn::Var<float> forward(std::span<const MASample> mas,
                         std::span<const PASample> masked_pas) const;

  // thresholded middle-bar prediction for one window
  Bar predict_bar(const MASample& ma, const PASample& masked_pa, double threshold = 0.5) const;

  nn::ParamRegistry<float>& params() { return params_; }
  const InfillOptions& options() const { return opt_; }

 private:
  struct MixerBlock {
    nn::LayerNorm<float> ln_token, ln_channel;
    nn::Dense<float> token_lift, token_lower;      // over the 32 positions
    nn::Dense<float> channel_lift, channel_lower;  // over channels
  };

  nn::Var<float> decode_mlp(const nn::Var<float>& latent) const;
  nn::Var<float> decode_mixer(const nn::Var<float>& latent) const;
  nn::Var<float> decode_conv(const nn::Var<float>& latent) const;

  InfillOptions opt_;
  nn::FeatureEmbedder<float> ma_embed_, pa_embed_;
  std::vector<nn::EncoderBlock<float>> ma_enc_, pa_enc_;
  // MLP decoder
  nn::Dense<float> mlp1_, mlp2_, mlp3_;
  // mixer decoder
  nn::Dense<float> mixer_expand_;
  std::vector<MixerBlock> mixer_blocks_;
  nn::Dense<float> mixer_out_;
  // conv decoder
  std::vector<nn::Var<float>> conv_w_;
  std::vector<nn::Var<float>> conv_b_;
  nn::Dense<float> conv_out_;
  nn::ParamRegistry<float> params_;
};

}  // namespace drumsmith
