#pragma once

// Central finite-difference gradient checks shared by the unit suite and
// the acceptance binary: every differentiable op and block, double
// precision, >= 20 random shapes each, relative error < 1e-4.

#include <algorithm>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "drumsmith/nn/layers.hpp"
#include "drumsmith/nn/tensor.hpp"
#include "drumsmith/rng.hpp"

namespace gradsuite {

using namespace drumsmith;
using namespace drumsmith::nn;

using D = double;

struct Result {
  std::string op;
  int trials = 0;
  double max_err = 0.0;
};

inline std::vector<D> random_values(Rng& rng, int64_t n, double lo = -2.0, double hi = 2.0,
                                    double keepout = 0.0) {
  std::vector<D> v(n);
  for (auto& x : v) {
    do {
      x = rng.uniform(lo, hi);
    } while (keepout > 0.0 && std::abs(x) < keepout);
  }
  return v;
}

inline Shape random_shape(Rng& rng, int rank, int max_dim = 5) {
  Shape s(rank);
  for (auto& d : s) d = 1 + static_cast<int>(rng.uniform_int(max_dim));
  return s;
}

// fixed projection making a scalar out of an arbitrary-shaped output
inline Var<D> project(const Var<D>& out, Rng& rng) {
  auto w = Var<D>::leaf(out.shape(), random_values(rng, out.size(), -1.0, 1.0));
  return sum_all(mul(out, w));
}

// max relative error between analytic and central-difference gradients over
// every element of every input
inline double max_grad_error(const std::function<Var<D>()>& build,
                             std::span<const Var<D>> inputs, double h = 1e-5) {
  Var<D> loss = build();
  loss.backward();
  std::vector<std::vector<D>> analytic;
  analytic.reserve(inputs.size());
  for (const auto& in : inputs) analytic.push_back(in.grad());

  double worst = 0.0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    auto& vals = inputs[k].value();
    for (size_t i = 0; i < vals.size(); ++i) {
      const D orig = vals[i];
      vals[i] = orig + h;
      const D f1 = build().item();
      vals[i] = orig - h;
      const D f0 = build().item();
      vals[i] = orig;
      const D numeric = (f1 - f0) / (2 * h);
      const D a = analytic[k][i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
    inputs[k].zero_grad();
  }
  return worst;
}

// Finite differences are invalid at ReLU kinks; resample the input until
// every pre-activation keeps a margin from zero.
template <class PreactsFn>
Var<D> safe_input(Rng& rng, const Shape& s, double lo, double hi, PreactsFn&& preacts,
                  double margin = 5e-3) {
  for (int attempt = 0; attempt < 500; ++attempt) {
    auto x = Var<D>::leaf(s, random_values(rng, numel(s), lo, hi), true);
    double mn = 1e30;
    NoGradGuard ng;
    for (const Var<D>& p : preacts(x)) {
      for (D v : p.value()) mn = std::min(mn, std::abs(v));
    }
    if (mn > margin) return x;
  }
  throw Error("could not find a kink-free input");
}

constexpr int kTrials = 20;

class Suite {
 public:
  std::vector<Result> results;

  void record(const std::string& op, double err) {
    for (auto& r : results) {
      if (r.op == op) {
        r.max_err = std::max(r.max_err, err);
        ++r.trials;
        return;
      }
    }
    results.push_back({op, 1, err});
  }

  void run_all() {
    elementwise();
    relu_op();
    matmul_op();
    bmm_op();
    add_bias_op();
    shape_ops();
    softmax_ops();
    layer_norm_op();
    gather_pool_reduce();
    losses();
    conv_ops();
    composite_blocks();
  }

  void elementwise() {
    Rng rng(101);
    for (int t = 0; t < kTrials; ++t) {
      Shape s = random_shape(rng, 1 + static_cast<int>(rng.uniform_int(3)));
      auto a = Var<D>::leaf(s, random_values(rng, numel(s)), true);
      auto b = Var<D>::leaf(s, random_values(rng, numel(s)), true);
      Var<D> inputs[] = {a, b};
      Rng p(1000 + t);
      {
        Rng q0 = p;
        record("add", max_grad_error([&] { Rng q = q0; return project(add(a, b), q); }, inputs));
      }
      {
        Rng q0 = p;
        record("sub", max_grad_error([&] { Rng q = q0; return project(sub(a, b), q); }, inputs));
      }
      {
        Rng q0 = p;
        record("mul", max_grad_error([&] { Rng q = q0; return project(mul(a, b), q); }, inputs));
      }
      {
        Rng q0 = p;
        record("scale", max_grad_error([&] { Rng q = q0; return project(scale(a, D(1.7)), q); },
                                       std::span(inputs, 1)));
      }
      {
        Rng q0 = p;
        record("sigmoid", max_grad_error([&] { Rng q = q0; return project(sigmoid(a), q); },
                                         std::span(inputs, 1)));
      }
    }
  }

  void relu_op() {
    Rng rng(102);
    for (int t = 0; t < kTrials; ++t) {
      Shape s = random_shape(rng, 2);
      auto a = Var<D>::leaf(s, random_values(rng, numel(s), -2.0, 2.0, 0.05), true);
      Var<D> in[] = {a};
      Rng p(2000 + t);
      record("relu", max_grad_error([&] { Rng q = p; return project(relu(a), q); }, in));
    }
  }

  void matmul_op() {
    Rng rng(103);
    for (int t = 0; t < kTrials; ++t) {
      const int K = 1 + static_cast<int>(rng.uniform_int(5));
      const int N = 1 + static_cast<int>(rng.uniform_int(5));
      Shape xs = t % 2 == 0 ? Shape{1 + (int)rng.uniform_int(4), K}
                            : Shape{1 + (int)rng.uniform_int(3), 1 + (int)rng.uniform_int(3), K};
      auto x = Var<D>::leaf(xs, random_values(rng, numel(xs)), true);
      auto w = Var<D>::leaf({K, N}, random_values(rng, K * N), true);
      Var<D> in[] = {x, w};
      Rng p(3000 + t);
      record("matmul", max_grad_error([&] { Rng q = p; return project(matmul(x, w), q); }, in));
    }
  }

  void bmm_op() {
    Rng rng(104);
    for (int t = 0; t < kTrials; ++t) {
      const int M = 1 + (int)rng.uniform_int(4), K = 1 + (int)rng.uniform_int(4),
                N = 1 + (int)rng.uniform_int(4);
      const bool transB = t % 2 == 1;
      const bool rank4 = t % 3 == 0;
      Shape lead = rank4 ? Shape{1 + (int)rng.uniform_int(2), 1 + (int)rng.uniform_int(3)}
                         : Shape{1 + (int)rng.uniform_int(3)};
      Shape as(lead), bs(lead);
      as.insert(as.end(), {M, K});
      if (transB) {
        bs.insert(bs.end(), {N, K});
      } else {
        bs.insert(bs.end(), {K, N});
      }
      auto a = Var<D>::leaf(as, random_values(rng, numel(as)), true);
      auto b = Var<D>::leaf(bs, random_values(rng, numel(bs)), true);
      Var<D> in[] = {a, b};
      Rng p(4000 + t);
      record("bmm", max_grad_error(
                        [&] { Rng q = p; return project(bmm(a, b, transB, D(0.37)), q); }, in));
    }
  }

  void add_bias_op() {
    Rng rng(105);
    for (int t = 0; t < kTrials; ++t) {
      Shape s = random_shape(rng, 2 + static_cast<int>(rng.uniform_int(2)));
      auto x = Var<D>::leaf(s, random_values(rng, numel(s)), true);
      auto b = Var<D>::leaf({s.back()}, random_values(rng, s.back()), true);
      Var<D> in[] = {x, b};
      Rng p(5000 + t);
      record("add_bias",
             max_grad_error([&] { Rng q = p; return project(add_bias(x, b), q); }, in));
    }
  }

  void shape_ops() {
    Rng rng(106);
    for (int t = 0; t < kTrials; ++t) {
      Rng p(6000 + t);
      {
        Shape s = random_shape(rng, 3);
        auto x = Var<D>::leaf(s, random_values(rng, numel(s)), true);
        Var<D> in[] = {x};
        Shape flat{static_cast<int>(numel(s))};
        Rng q0 = p;
        record("reshape",
               max_grad_error([&] { Rng q = q0; return project(reshape(x, flat), q); }, in));
      }
      {
        Shape s = random_shape(rng, 4, 4);
        auto x = Var<D>::leaf(s, random_values(rng, numel(s)), true);
        Var<D> in[] = {x};
        Rng q0 = p;
        record("permute_0213",
               max_grad_error([&] { Rng q = q0; return project(permute_0213(x), q); }, in));
      }
      {
        Shape s = random_shape(rng, 3);
        auto x = Var<D>::leaf(s, random_values(rng, numel(s)), true);
        Var<D> in[] = {x};
        Rng q0 = p;
        record("transpose_12",
               max_grad_error([&] { Rng q = q0; return project(transpose_12(x), q); }, in));
      }
      {
        Shape sa = random_shape(rng, 2);
        Shape sb = sa;
        sb.back() = 1 + static_cast<int>(rng.uniform_int(5));
        auto a = Var<D>::leaf(sa, random_values(rng, numel(sa)), true);
        auto b = Var<D>::leaf(sb, random_values(rng, numel(sb)), true);
        Var<D> in[] = {a, b};
        Rng q0 = p;
        record("concat_last",
               max_grad_error([&] { Rng q = q0; return project(concat_last(a, b), q); }, in));
      }
    }
  }

  void softmax_ops() {
    Rng rng(107);
    for (int t = 0; t < kTrials; ++t) {
      Shape s = random_shape(rng, 3);
      auto x = Var<D>::leaf(s, random_values(rng, numel(s), -3.0, 3.0), true);
      Var<D> in[] = {x};
      const int axis = static_cast<int>(rng.uniform_int(3));
      Rng p(7000 + t);
      {
        Rng q0 = p;
        record("softmax",
               max_grad_error([&] { Rng q = q0; return project(softmax(x, axis), q); }, in));
      }
      {
        const int Tq = 1 + static_cast<int>(rng.uniform_int(4));
        const int Tk = Tq + static_cast<int>(rng.uniform_int(3));
        Shape cs{1 + (int)rng.uniform_int(3), Tq, Tk};
        auto y = Var<D>::leaf(cs, random_values(rng, numel(cs), -3.0, 3.0), true);
        Var<D> cin[] = {y};
        Rng q0 = p;
        record("softmax_causal",
               max_grad_error([&] { Rng q = q0; return project(softmax_causal(y), q); }, cin));
      }
    }
  }

  void layer_norm_op() {
    Rng rng(108);
    for (int t = 0; t < kTrials; ++t) {
      const int Dn = 2 + static_cast<int>(rng.uniform_int(6));
      Shape s{1 + (int)rng.uniform_int(4), Dn};
      auto x = Var<D>::leaf(s, random_values(rng, numel(s)), true);
      auto g = Var<D>::leaf({Dn}, random_values(rng, Dn, 0.5, 1.5), true);
      auto b = Var<D>::leaf({Dn}, random_values(rng, Dn), true);
      Var<D> in[] = {x, g, b};
      Rng p(8000 + t);
      record("layer_norm",
             max_grad_error([&] { Rng q = p; return project(layer_norm(x, g, b), q); }, in));
    }
  }

  void gather_pool_reduce() {
    Rng rng(109);
    for (int t = 0; t < kTrials; ++t) {
      Rng p(9000 + t);
      {
        const int V = 3 + (int)rng.uniform_int(5), Dn = 1 + (int)rng.uniform_int(5);
        const int B = 1 + (int)rng.uniform_int(3), L = 1 + (int)rng.uniform_int(4);
        auto table = Var<D>::leaf({V, Dn}, random_values(rng, V * Dn), true);
        std::vector<int> ids(B * L);
        for (auto& id : ids) id = static_cast<int>(rng.uniform_int(V));
        Var<D> in[] = {table};
        Rng q0 = p;
        record("embedding",
               max_grad_error(
                   [&] { Rng q = q0; return project(embedding(table, ids, {B, L}), q); }, in));
      }
      {
        Shape s = random_shape(rng, 3);
        auto x = Var<D>::leaf(s, random_values(rng, numel(s)), true);
        Var<D> in[] = {x};
        Rng q0 = p;
        record("mean_axis1",
               max_grad_error([&] { Rng q = q0; return project(mean_axis1(x), q); }, in));
        record("sum_all", max_grad_error([&] { return sum_all(x); }, in));
        record("mean_all", max_grad_error([&] { return mean_all(x); }, in));
      }
    }
  }

  void losses() {
    Rng rng(110);
    for (int t = 0; t < kTrials; ++t) {
      {
        const int N = 1 + (int)rng.uniform_int(5), V = 2 + (int)rng.uniform_int(6);
        auto logits = Var<D>::leaf({N, V}, random_values(rng, N * V, -3.0, 3.0), true);
        std::vector<int> targets(N);
        for (int i = 0; i < N; ++i) {
          targets[i] = t % 4 == 0 && i == 0 ? -1 : static_cast<int>(rng.uniform_int(V));
        }
        if (std::all_of(targets.begin(), targets.end(), [](int x) { return x == -1; })) {
          targets.back() = 0;
        }
        Var<D> in[] = {logits};
        record("cross_entropy",
               max_grad_error([&] { return cross_entropy_logits(logits, targets, -1); }, in));
      }
      {
        const D delta = 0.5 + rng.uniform() * 1.5;
        Shape s = random_shape(rng, 2);
        std::vector<D> target = random_values(rng, numel(s));
        // keep |error| away from the quadratic/linear boundary
        std::vector<D> pred(target.size());
        for (size_t i = 0; i < pred.size(); ++i) {
          D off;
          do {
            off = rng.uniform(-2.0, 2.0);
          } while (std::abs(std::abs(off) - delta) < 0.05);
          pred[i] = target[i] + off;
        }
        auto pv = Var<D>::leaf(s, pred, true);
        Var<D> in[] = {pv};
        record("huber",
               max_grad_error([&] { return huber(pv, std::vector<D>(target), delta); }, in));
      }
    }
  }

  void conv_ops() {
    Rng rng(111);
    for (int t = 0; t < kTrials; ++t) {
      const int B = 1 + (int)rng.uniform_int(2), Tn = 2 + (int)rng.uniform_int(5);
      const int Cin = 1 + (int)rng.uniform_int(4), Cout = 1 + (int)rng.uniform_int(4);
      const int K = (t % 2 == 0) ? 3 : 5;
      auto x = Var<D>::leaf({B, Tn, Cin}, random_values(rng, int64_t(B) * Tn * Cin), true);
      auto w = Var<D>::leaf({K, Cin, Cout}, random_values(rng, int64_t(K) * Cin * Cout), true);
      auto b = Var<D>::leaf({Cout}, random_values(rng, Cout), true);
      Rng p(11000 + t);
      {
        Var<D> in[] = {x, w, b};
        Rng q0 = p;
        record("conv1d",
               max_grad_error([&] { Rng q = q0; return project(conv1d_same(x, w, b), q); }, in));
      }
      {
        Var<D> in[] = {x};
        Rng q0 = p;
        record("upsample2",
               max_grad_error([&] { Rng q = q0; return project(upsample2_time(x), q); }, in));
      }
    }
  }

  void composite_blocks() {
    Rng rng(112);
    for (int t = 0; t < kTrials; ++t) {
      Rng init(500 + t);
      const int Dn = 4 + 2 * (int)rng.uniform_int(3);  // 4, 6, 8
      const int B = 1 + (int)rng.uniform_int(2), Tn = 2 + (int)rng.uniform_int(3);
      Rng p(12000 + t);

      {
        MultiHeadAttention<D> attn(init, Dn, 2);
        ParamRegistry<D> reg;
        attn.register_params(reg, "a");
        auto x = Var<D>::leaf({B, Tn, Dn}, random_values(rng, int64_t(B) * Tn * Dn), true);
        std::vector<Var<D>> in{x};
        for (auto& e : reg.entries) in.push_back(e.var);
        const bool causal = t % 2 == 0;
        Rng q0 = p;
        record("multi_head_attention",
               max_grad_error([&] { Rng q = q0; return project(attn(x, x, causal), q); }, in));
      }
      {
        EncoderBlock<D> block(init, Dn, 2);
        ParamRegistry<D> reg;
        block.register_params(reg, "e");
        auto x = safe_input(rng, {B, Tn, Dn}, -2.0, 2.0, [&](const Var<D>& v) {
          return std::vector<Var<D>>{block.ff.lift(block.ln1(add(v, block.attn(v, v, false))))};
        });
        std::vector<Var<D>> in{x};
        for (auto& e : reg.entries) in.push_back(e.var);
        Rng q0 = p;
        record("encoder_block",
               max_grad_error([&] { Rng q = q0; return project(block(x), q); }, in));
      }
      {
        DecoderBlock<D> block(init, Dn, 2);
        ParamRegistry<D> reg;
        block.register_params(reg, "d");
        const int Te = 2 + (int)rng.uniform_int(3);
        auto enc = Var<D>::leaf({B, Te, Dn}, random_values(rng, int64_t(B) * Te * Dn), true);
        auto x = safe_input(rng, {B, Tn, Dn}, -2.0, 2.0, [&](const Var<D>& v) {
          Var<D> h = block.ln1(add(v, block.self_attn(v, v, true)));
          h = block.ln2(add(h, block.cross_attn(h, enc, false)));
          return std::vector<Var<D>>{block.ff.lift(h)};
        });
        std::vector<Var<D>> in{x, enc};
        for (auto& e : reg.entries) in.push_back(e.var);
        Rng q0 = p;
        record("decoder_block",
               max_grad_error([&] { Rng q = q0; return project(block(x, enc), q); }, in));
      }
      {
        // the MA embedding path: dense 1024/128 structure at toy size
        const int in_dim = 3 + (int)rng.uniform_int(4);
        FeatureEmbedder<D> embed(init, in_dim, 6, Dn);
        ParamRegistry<D> reg;
        embed.register_params(reg, "m");
        auto x = safe_input(rng, {B, Tn, in_dim}, 0.05, 1.0, [&](const Var<D>& v) {
          Var<D> pre1 = embed.hidden(v);
          Var<D> pre2 = embed.out(relu(pre1));
          return std::vector<Var<D>>{pre1, pre2};
        });
        std::vector<Var<D>> in{x};
        for (auto& e : reg.entries) in.push_back(e.var);
        Rng q0 = p;
        record("embed_ma",
               max_grad_error([&] { Rng q = q0; return project(embed(x), q); }, in));
      }
    }
  }
};

inline std::vector<Result> run_all() {
  Suite s;
  s.run_all();
  return s.results;
}

}  // namespace gradsuite
