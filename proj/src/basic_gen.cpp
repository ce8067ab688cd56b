#include "drumsmith/models/basic_gen.hpp"

#include <cmath>
#include <cstring>

namespace drumsmith {

using nn::Var;

nn::Var<float> ma_to_var(std::span<const MASample> mas) {
  if (mas.empty()) throw EmptyInput("empty MA batch");
  const int b_n = static_cast<int>(mas.size());
  std::vector<float> data(static_cast<size_t>(b_n) * kSampleTimesteps * kMaFeatureDim);
  for (int b = 0; b < b_n; ++b) {
    std::copy(mas[b].features.data.begin(), mas[b].features.data.end(),
              data.begin() + static_cast<size_t>(b) * kSampleTimesteps * kMaFeatureDim);
  }
  return Var<float>::leaf({b_n, kSampleTimesteps, kMaFeatureDim}, std::move(data));
}

nn::Var<float> pa_to_var(std::span<const PASample> pas) {
  if (pas.empty()) throw EmptyInput("empty PA batch");
  const int b_n = static_cast<int>(pas.size());
  std::vector<float> data(static_cast<size_t>(b_n) * kSampleTimesteps * kNumLanes);
  for (int b = 0; b < b_n; ++b) {
    const auto& g = pas[b].grid.data;
    float* dst = data.data() + static_cast<size_t>(b) * kSampleTimesteps * kNumLanes;
    for (size_t i = 0; i < g.size(); ++i) dst[i] = static_cast<float>(g[i]);
  }
  return Var<float>::leaf({b_n, kSampleTimesteps, kNumLanes}, std::move(data));
}

BasicDrumGen::BasicDrumGen(const BasicGenOptions& opt, uint64_t seed) : opt_(opt) {
  Rng rng(seed);
  const int d = opt.model_dim;
  ma_embed_ = nn::FeatureEmbedder<float>(rng, kMaFeatureDim, opt.embed_hidden, d);
  token_table_ = nn::make_param<float>(rng, {opt.vocab + 1, d}, d);
  token_pos_ = nn::PositionEncoder<float>(rng, d);
  for (int i = 0; i < opt.enc_layers; ++i) enc_.emplace_back(rng, d, opt.heads, 0, opt.ff_mult * d);
  for (int i = 0; i < opt.dec_layers; ++i) dec_.emplace_back(rng, d, opt.heads, opt.ff_mult * d);
  out_ = nn::Dense<float>(rng, d, opt.vocab);
  if (opt.zero_init_output) out_.zero_init();

  ma_embed_.register_params(params_, "ma_embed");
  params_.add("token_table", token_table_);
  token_pos_.register_params(params_, "token_pos");
  for (int i = 0; i < opt.enc_layers; ++i) {
    enc_[i].register_params(params_, "enc." + std::to_string(i));
  }
  for (int i = 0; i < opt.dec_layers; ++i) {
    dec_[i].register_params(params_, "dec." + std::to_string(i));
  }
  out_.register_params(params_, "out");
}

Var<float> BasicDrumGen::encode(std::span<const MASample> mas) const {
  Var<float> x = ma_embed_(ma_to_var(mas));
  for (const auto& block : enc_) x = block(x);
  return x;
}

Var<float> BasicDrumGen::decode_logits(const Var<float>& enc_out,
                                       const std::vector<std::vector<int>>& dec_inputs) const {
  if (dec_inputs.empty()) throw EmptyInput("empty decoder batch");
  const int b_n = static_cast<int>(dec_inputs.size());
  const int len = static_cast<int>(dec_inputs.front().size());
  std::vector<int> flat;
  flat.reserve(static_cast<size_t>(b_n) * len);
  for (const auto& row : dec_inputs) {
    if (static_cast<int>(row.size()) != len) {
      throw ShapeMismatch("decoder inputs must share one length");
    }
    for (int id : row) {
      if (id < 0 || id > kBosId) throw TokenOutOfRange("decoder token " + std::to_string(id));
      flat.push_back(id);
    }
  }
  Var<float> x = nn::embedding(token_table_, std::move(flat), {b_n, len});
  x = token_pos_(x);
  for (const auto& block : dec_) x = block(x, enc_out);
  return out_(x);
}

Var<float> BasicDrumGen::forward(std::span<const MASample> mas,
                                 const std::vector<std::vector<int>>& dec_inputs) const {
  return decode_logits(encode(mas), dec_inputs);
}

// ---- incremental sampler --------------------------------------------------

namespace {

// y[out] = x[in] . W[in,out] + b[out]
void affine(const float* x, const nn::Dense<float>& dense, float* y) {
  const int in = dense.weight.dim(0), out = dense.weight.dim(1);
  std::memcpy(y, dense.bias.value().data(), sizeof(float) * out);
  const float* w = dense.weight.value().data();
  for (int i = 0; i < in; ++i) {
    const float xi = x[i];
    if (xi == 0.f) continue;
    const float* row = w + static_cast<size_t>(i) * out;
    for (int j = 0; j < out; ++j) y[j] += xi * row[j];
  }
}

void layernorm_vec(float* x, const nn::LayerNorm<float>& ln, int d, float eps = 1e-5f) {
  float mean = 0.f;
  for (int j = 0; j < d; ++j) mean += x[j];
  mean /= d;
  float var = 0.f;
  for (int j = 0; j < d; ++j) var += (x[j] - mean) * (x[j] - mean);
  var /= d;
  const float rstd = 1.f / std::sqrt(var + eps);
  const auto& gain = ln.gain.value();
  const auto& bias = ln.bias.value();
  for (int j = 0; j < d; ++j) x[j] = (x[j] - mean) * rstd * gain[j] + bias[j];
}

}  // namespace

BasicGenSampler::BasicGenSampler(const BasicDrumGen& model, const MASample& ma, int max_len)
    : model_(model), max_len_(max_len) {
  const int d = model.opt_.model_dim;
  {
    nn::NoGradGuard ng;
    Var<float> enc = model.encode(std::span<const MASample>(&ma, 1));
    enc_out_ = enc.value();  // [352, D]
  }
  positions_ = nn::sinusoidal_positions<float>(max_len, d);
  const int inner = model.dec_.front().self_attn.heads * model.dec_.front().self_attn.head_dim;
  layers_.resize(model.dec_.size());
  std::vector<float> tmp(inner);
  for (size_t l = 0; l < model.dec_.size(); ++l) {
    auto& cache = layers_[l];
    cache.self_k.reserve(static_cast<size_t>(max_len) * inner);
    cache.self_v.reserve(static_cast<size_t>(max_len) * inner);
    cache.cross_k.resize(static_cast<size_t>(kSampleTimesteps) * inner);
    cache.cross_v.resize(static_cast<size_t>(kSampleTimesteps) * inner);
    const auto& cross = model.dec_[l].cross_attn;
    for (int t = 0; t < kSampleTimesteps; ++t) {
      affine(enc_out_.data() + static_cast<size_t>(t) * d, cross.wk, tmp.data());
      std::copy(tmp.begin(), tmp.end(), cache.cross_k.begin() + static_cast<size_t>(t) * inner);
      affine(enc_out_.data() + static_cast<size_t>(t) * d, cross.wv, tmp.data());
      std::copy(tmp.begin(), tmp.end(), cache.cross_v.begin() + static_cast<size_t>(t) * inner);
    }
  }
  logits_.resize(model.opt_.vocab);
  x_.resize(d);
  scratch_a_.resize(std::max({2 * d, inner, model.opt_.ff_mult * d}));
  scratch_b_.resize(std::max({2 * d, inner, model.opt_.ff_mult * d}));
  scratch_c_.resize(std::max({2 * d, inner, model.opt_.ff_mult * d}));
}

void BasicGenSampler::attend(const float* q, const float* k_cache, const float* v_cache,
                             int t_len, std::vector<float>& ctx) const {
  const auto& attn = model_.dec_.front().self_attn;
  const int heads = attn.heads, dh = attn.head_dim;
  const float scale = 1.f / std::sqrt(static_cast<float>(dh));
  const int inner = heads * dh;
  thread_local std::vector<float> weights;
  weights.resize(t_len);
  for (int h = 0; h < heads; ++h) {
    const float* qh = q + h * dh;
    float mx = -1e30f;
    for (int t = 0; t < t_len; ++t) {
      const float* kh = k_cache + static_cast<size_t>(t) * inner + h * dh;
      float dot = 0.f;
      for (int j = 0; j < dh; ++j) dot += qh[j] * kh[j];
      weights[t] = dot * scale;
      mx = std::max(mx, weights[t]);
    }
    float sum = 0.f;
    for (int t = 0; t < t_len; ++t) {
      weights[t] = std::exp(weights[t] - mx);
      sum += weights[t];
    }
    float* ch = ctx.data() + h * dh;
    std::fill(ch, ch + dh, 0.f);
    for (int t = 0; t < t_len; ++t) {
      const float a = weights[t] / sum;
      const float* vh = v_cache + static_cast<size_t>(t) * inner + h * dh;
      for (int j = 0; j < dh; ++j) ch[j] += a * vh[j];
    }
  }
}

const std::vector<float>& BasicGenSampler::step(int token_id) {
  if (pos_ >= max_len_) throw IndexOutOfRange("sampler past max length");
  if (token_id < 0 || token_id > BasicDrumGen::kBosId) {
    throw TokenOutOfRange("sampler token " + std::to_string(token_id));
  }
  const int d = model_.opt_.model_dim;
  const auto& attn0 = model_.dec_.front().self_attn;
  const int inner = attn0.heads * attn0.head_dim;

  // token embedding + position encoder
  const float* row = model_.token_table_.value().data() + static_cast<size_t>(token_id) * d;
  std::copy(row, row + d, scratch_a_.begin());
  std::copy(positions_.begin() + static_cast<size_t>(pos_) * d,
            positions_.begin() + static_cast<size_t>(pos_ + 1) * d, scratch_a_.begin() + d);
  affine(scratch_a_.data(), model_.token_pos_.proj, x_.data());

  std::vector<float>& q = scratch_a_;
  std::vector<float>& ctx = scratch_b_;
  std::vector<float>& proj = scratch_c_;
  for (size_t l = 0; l < model_.dec_.size(); ++l) {
    const auto& block = model_.dec_[l];
    auto& cache = layers_[l];
    // causal self-attention over the cached prefix plus this position
    affine(x_.data(), block.self_attn.wq, q.data());
    cache.self_k.resize(static_cast<size_t>(pos_ + 1) * inner);
    cache.self_v.resize(static_cast<size_t>(pos_ + 1) * inner);
    affine(x_.data(), block.self_attn.wk, cache.self_k.data() + static_cast<size_t>(pos_) * inner);
    affine(x_.data(), block.self_attn.wv, cache.self_v.data() + static_cast<size_t>(pos_) * inner);
    attend(q.data(), cache.self_k.data(), cache.self_v.data(), pos_ + 1, ctx);
    affine(ctx.data(), block.self_attn.wo, proj.data());
    for (int j = 0; j < d; ++j) x_[j] += proj[j];
    layernorm_vec(x_.data(), block.ln1, d);
    // cross-attention over the encoder output
    affine(x_.data(), block.cross_attn.wq, q.data());
    attend(q.data(), cache.cross_k.data(), cache.cross_v.data(), kSampleTimesteps, ctx);
    affine(ctx.data(), block.cross_attn.wo, proj.data());
    for (int j = 0; j < d; ++j) x_[j] += proj[j];
    layernorm_vec(x_.data(), block.ln2, d);
    // feed-forward
    affine(x_.data(), block.ff.lift, q.data());
    const int hidden = block.ff.lift.weight.dim(1);
    for (int j = 0; j < hidden; ++j) q[j] = q[j] > 0.f ? q[j] : 0.f;
    affine(q.data(), block.ff.lower, proj.data());
    for (int j = 0; j < d; ++j) x_[j] += proj[j];
    layernorm_vec(x_.data(), block.ln3, d);
  }
  affine(x_.data(), model_.out_, logits_.data());
  ++pos_;
  return logits_;
}

}  // namespace drumsmith
