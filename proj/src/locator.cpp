#include "drumsmith/models/locator.hpp"

namespace drumsmith {

using nn::Var;

ImprovLocator::ImprovLocator(const LocatorOptions& opt, uint64_t seed) : opt_(opt) {
  Rng rng(seed);
  embed_ = nn::FeatureEmbedder<float>(rng, kMaFeatureDim, opt.embed_hidden, opt.embed_dim);
  bridge_ = nn::Dense<float>(rng, opt.embed_dim, opt.model_dim);
  for (int i = 0; i < opt.enc_layers; ++i) {
    enc_.emplace_back(rng, opt.model_dim, opt.heads, opt.head_dim, opt.ff_mult * opt.model_dim);
  }
  fc_hidden_ = nn::Dense<float>(rng, opt.model_dim, opt.hidden);
  fc_out_ = nn::Dense<float>(rng, opt.hidden, 2);

  embed_.register_params(params_, "embed");
  bridge_.register_params(params_, "bridge");
  for (int i = 0; i < opt.enc_layers; ++i) {
    enc_[i].register_params(params_, "enc." + std::to_string(i));
  }
  fc_hidden_.register_params(params_, "fc_hidden");
  fc_out_.register_params(params_, "fc_out");
}

Var<float> ImprovLocator::forward(std::span<const MASample> windows) const {
  Var<float> x = bridge_(embed_(ma_to_var(windows)));
  for (const auto& block : enc_) x = block(x);
  Var<float> pooled = nn::mean_axis1(x);  // [B, model_dim]
  return nn::softmax_last(fc_out_(nn::relu(fc_hidden_(pooled))));
}

std::vector<float> ImprovLocator::predict(std::span<const MASample> windows,
                                          int batch_size) const {
  nn::NoGradGuard ng;
  std::vector<float> out;
  out.reserve(windows.size());
  for (size_t i = 0; i < windows.size(); i += batch_size) {
    const size_t n = std::min(static_cast<size_t>(batch_size), windows.size() - i);
    Var<float> probs = forward(windows.subspan(i, n));
    for (size_t b = 0; b < n; ++b) out.push_back(probs.value()[2 * b + 1]);
  }
  return out;
}

}  // namespace drumsmith
