#pragma once

#include <span>
#include <vector>

#include "drumsmith/config.hpp"
#include "drumsmith/models/common.hpp"

namespace drumsmith {

// Encoder classifier over an 11-bar MA window; predicts whether the middle
// bar is an improvisation location. Output is a softmax pair
// [P(plain), P(improvised)].
class ImprovLocator {
 public:
  ImprovLocator(const LocatorOptions& opt, uint64_t seed);

  nn::Var<float> forward(std::span<const MASample> windows) const;

  // P(improvised) per window, batched inference without tape
  std::vector<float> predict(std::span<const MASample> windows, int batch_size = 8) const;

  nn::ParamRegistry<float>& params() { return params_; }
  const LocatorOptions& options() const { return opt_; }

 private:
  LocatorOptions opt_;
  nn::FeatureEmbedder<float> embed_;
  nn::Dense<float> bridge_;  // embed_dim -> model_dim
  std::vector<nn::EncoderBlock<float>> enc_;
  nn::Dense<float> fc_hidden_, fc_out_;
  nn::ParamRegistry<float> params_;
};

}  // namespace drumsmith
