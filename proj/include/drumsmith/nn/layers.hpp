#pragma once

#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "drumsmith/nn/tensor.hpp"
#include "drumsmith/rng.hpp"

namespace drumsmith::nn {

// Ordered named-parameter table; the optimizer and checkpointing both walk
// it, so each parameter must appear exactly once.
template <class T>
struct ParamRegistry {
  struct Entry {
    std::string name;
    Var<T> var;
  };
  std::vector<Entry> entries;

  void add(const std::string& name, const Var<T>& var) {
    for (const auto& e : entries) {
      if (e.name == name) throw Error("duplicate parameter name: " + name);
      if (e.var.node().get() == var.node().get()) {
        throw Error("parameter registered twice: " + name + " aliases " + e.name);
      }
    }
    entries.push_back({name, var});
  }

  int64_t total_params() const {
    int64_t n = 0;
    for (const auto& e : entries) n += e.var.size();
    return n;
  }

  const Var<T>* find(const std::string& name) const {
    for (const auto& e : entries) {
      if (e.name == name) return &e.var;
    }
    return nullptr;
  }

  void zero_grads() {
    for (auto& e : entries) e.var.zero_grad();
  }
};

// Uniform init scaled by fan-in: U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
template <class T>
Var<T> make_param(Rng& rng, Shape shape, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<T> v(numel(shape));
  for (T& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
  return Var<T>::leaf(std::move(shape), std::move(v), true);
}

template <class T>
Var<T> make_const_param(Shape shape, T fill) {
  std::vector<T> v(numel(shape), fill);
  return Var<T>::leaf(std::move(shape), std::move(v), true);
}

template <class T>
struct Dense {
  Var<T> weight;  // [in, out]
  Var<T> bias;    // [out]

  Dense() = default;
  Dense(Rng& rng, int in, int out)
      : weight(make_param<T>(rng, {in, out}, in)), bias(make_const_param<T>({out}, T(0))) {}

  Var<T> operator()(const Var<T>& x) const { return add_bias(matmul(x, weight), bias); }

  void zero_init() {
    std::fill(weight.value().begin(), weight.value().end(), T(0));
    std::fill(bias.value().begin(), bias.value().end(), T(0));
  }

  void register_params(ParamRegistry<T>& reg, const std::string& prefix) const {
    reg.add(prefix + ".weight", weight);
    reg.add(prefix + ".bias", bias);
  }
};

template <class T>
struct LayerNorm {
  Var<T> gain;
  Var<T> bias;

  LayerNorm() = default;
  explicit LayerNorm(int dim)
      : gain(make_const_param<T>({dim}, T(1))), bias(make_const_param<T>({dim}, T(0))) {}

  Var<T> operator()(const Var<T>& x) const { return layer_norm(x, gain, bias); }

  void register_params(ParamRegistry<T>& reg, const std::string& prefix) const {
    reg.add(prefix + ".gain", gain);
    reg.add(prefix + ".bias", bias);
  }
};

// Scaled dot-product attention, heads folded into one projection each side.
// head_dim is normally model_dim/heads but may be set explicitly (the
// location model runs 12 heads of dim 6 over a 64-dim latent, with the
// output projection mapping 72 back to 64).
template <class T>
struct MultiHeadAttention {
  Dense<T> wq, wk, wv, wo;
  int heads = 0;
  int head_dim = 0;
  int model_dim = 0;

  MultiHeadAttention() = default;
  MultiHeadAttention(Rng& rng, int model_dim_, int heads_, int head_dim_ = 0)
      : heads(heads_), head_dim(head_dim_), model_dim(model_dim_) {
    if (head_dim == 0) {
      if (model_dim % heads != 0) {
        throw BadHeadCount("model dim " + std::to_string(model_dim) +
                           " not divisible by " + std::to_string(heads) + " heads");
      }
      head_dim = model_dim / heads;
    }
    const int inner = heads * head_dim;
    wq = Dense<T>(rng, model_dim, inner);
    wk = Dense<T>(rng, model_dim, inner);
    wv = Dense<T>(rng, model_dim, inner);
    wo = Dense<T>(rng, inner, model_dim);
  }

  // q_in [B,Tq,D], kv_in [B,Tk,D]
  Var<T> operator()(const Var<T>& q_in, const Var<T>& kv_in, bool causal) const {
    const int B = q_in.dim(0), Tq = q_in.dim(1), Tk = kv_in.dim(1);
    auto split = [&](const Var<T>& x, int t_len) {
      return permute_0213(reshape(x, {B, t_len, heads, head_dim}));  // [B,h,T,dh]
    };
    Var<T> q = split(wq(q_in), Tq);
    Var<T> k = split(wk(kv_in), Tk);
    Var<T> v = split(wv(kv_in), Tk);
    const T alpha = T(1) / std::sqrt(static_cast<T>(head_dim));
    Var<T> scores = bmm(q, k, /*transB=*/true, alpha);  // [B,h,Tq,Tk]
    Var<T> attn = causal ? softmax_causal(scores) : softmax_last(scores);
    Var<T> ctx = bmm(attn, v);  // [B,h,Tq,dh]
    Var<T> merged = reshape(permute_0213(ctx), {B, Tq, heads * head_dim});
    return wo(merged);
  }

  void register_params(ParamRegistry<T>& reg, const std::string& prefix) const {
    wq.register_params(reg, prefix + ".wq");
    wk.register_params(reg, prefix + ".wk");
    wv.register_params(reg, prefix + ".wv");
    wo.register_params(reg, prefix + ".wo");
  }
};

template <class T>
struct FeedForward {
  Dense<T> lift, lower;

  FeedForward() = default;
  FeedForward(Rng& rng, int dim, int hidden) : lift(rng, dim, hidden), lower(rng, hidden, dim) {}

  Var<T> operator()(const Var<T>& x) const { return lower(relu(lift(x))); }

  void register_params(ParamRegistry<T>& reg, const std::string& prefix) const {
    lift.register_params(reg, prefix + ".lift");
    lower.register_params(reg, prefix + ".lower");
  }
};

// Post-norm transformer encoder block.
template <class T>
struct EncoderBlock {
  MultiHeadAttention<T> attn;
  LayerNorm<T> ln1, ln2;
  FeedForward<T> ff;

  EncoderBlock() = default;
  EncoderBlock(Rng& rng, int dim, int heads, int head_dim = 0, int ff_hidden = 0)
      : attn(rng, dim, heads, head_dim),
        ln1(dim),
        ln2(dim),
        ff(rng, dim, ff_hidden ? ff_hidden : 4 * dim) {}

  Var<T> operator()(const Var<T>& x) const {
    Var<T> h = ln1(add(x, attn(x, x, /*causal=*/false)));
    return ln2(add(h, ff(h)));
  }

  void register_params(ParamRegistry<T>& reg, const std::string& prefix) const {
    attn.register_params(reg, prefix + ".attn");
    ln1.register_params(reg, prefix + ".ln1");
    ln2.register_params(reg, prefix + ".ln2");
    ff.register_params(reg, prefix + ".ff");
  }
};

// Post-norm decoder block: causal self-attention, cross-attention, FFN.
template <class T>
struct DecoderBlock {
  MultiHeadAttention<T> self_attn, cross_attn;
  LayerNorm<T> ln1, ln2, ln3;
  FeedForward<T> ff;

  DecoderBlock() = default;
  DecoderBlock(Rng& rng, int dim, int heads, int ff_hidden = 0)
      : self_attn(rng, dim, heads),
        cross_attn(rng, dim, heads),
        ln1(dim),
        ln2(dim),
        ln3(dim),
        ff(rng, dim, ff_hidden ? ff_hidden : 4 * dim) {}

  Var<T> operator()(const Var<T>& x, const Var<T>& enc_out) const {
    Var<T> h = ln1(add(x, self_attn(x, x, /*causal=*/true)));
    h = ln2(add(h, cross_attn(h, enc_out, /*causal=*/false)));
    return ln3(add(h, ff(h)));
  }

  void register_params(ParamRegistry<T>& reg, const std::string& prefix) const {
    self_attn.register_params(reg, prefix + ".self");
    cross_attn.register_params(reg, prefix + ".cross");
    ln1.register_params(reg, prefix + ".ln1");
    ln2.register_params(reg, prefix + ".ln2");
    ln3.register_params(reg, prefix + ".ln3");
    ff.register_params(reg, prefix + ".ff");
  }
};

// Concatenate sinusoidal positions with the embedded input and project back
// to the model dimension.
template <class T>
struct PositionEncoder {
  Dense<T> proj;
  int dim = 0;

  PositionEncoder() = default;
  PositionEncoder(Rng& rng, int dim_) : proj(rng, 2 * dim_, dim_), dim(dim_) {}

  // x [B,T,D] -> [B,T,D]
  Var<T> operator()(const Var<T>& x) const {
    const int B = x.dim(0), Tn = x.dim(1);
    const std::vector<T> pos = sinusoidal_positions<T>(Tn, dim);
    std::vector<T> tiled(static_cast<size_t>(B) * Tn * dim);
    for (int b = 0; b < B; ++b) {
      std::copy(pos.begin(), pos.end(), tiled.begin() + static_cast<size_t>(b) * Tn * dim);
    }
    Var<T> positions = Var<T>::leaf({B, Tn, dim}, std::move(tiled));
    return proj(concat_last(x, positions));
  }

  void register_params(ParamRegistry<T>& reg, const std::string& prefix) const {
    proj.register_params(reg, prefix + ".proj");
  }
};

// Two ReLU dense layers lifting sparse pianoroll features into the model
// space, then the position encoder.
template <class T>
struct FeatureEmbedder {
  Dense<T> hidden, out;
  PositionEncoder<T> pos;

  FeatureEmbedder() = default;
  FeatureEmbedder(Rng& rng, int in_dim, int hidden_dim, int model_dim)
      : hidden(rng, in_dim, hidden_dim), out(rng, hidden_dim, model_dim), pos(rng, model_dim) {}

  Var<T> operator()(const Var<T>& x) const { return pos(relu(out(relu(hidden(x))))); }

  void register_params(ParamRegistry<T>& reg, const std::string& prefix) const {
    hidden.register_params(reg, prefix + ".hidden");
    out.register_params(reg, prefix + ".out");
    pos.register_params(reg, prefix + ".pos");
  }
};

}  // namespace drumsmith::nn
