#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "drumsmith/nn/layers.hpp"

namespace drumsmith::nn {

struct AdamConfig {
  double lr_start = 1e-4;
  double lr_end = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Exponential decay from lr_start at epoch 0 to lr_end at the final epoch,
// clamped to [lr_end, lr_start].
inline double scheduled_lr(const AdamConfig& cfg, int epoch, int total_epochs) {
  if (total_epochs <= 1 || cfg.lr_start == cfg.lr_end) return cfg.lr_start;
  const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  const double lr = cfg.lr_start * std::pow(cfg.lr_end / cfg.lr_start, t);
  return std::clamp(lr, std::min(cfg.lr_start, cfg.lr_end), std::max(cfg.lr_start, cfg.lr_end));
}

// Bias-corrected Adam over a parameter registry.
template <class T>
class Adam {
 public:
  Adam(ParamRegistry<T>& params, AdamConfig cfg = {}) : params_(params), cfg_(cfg) {
    m_.resize(params.entries.size());
    v_.resize(params.entries.size());
    for (size_t i = 0; i < params.entries.size(); ++i) {
      const size_t n = static_cast<size_t>(params.entries[i].var.size());
      m_[i].assign(n, T(0));
      v_[i].assign(n, T(0));
    }
  }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (size_t i = 0; i < params_.entries.size(); ++i) {
      Var<T>& p = params_.entries[i].var;
      auto& val = p.value();
      auto& grad = p.grad();
      auto& m = m_[i];
      auto& v = v_[i];
      for (size_t j = 0; j < val.size(); ++j) {
        const double g = static_cast<double>(grad[j]);
        m[j] = static_cast<T>(cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g);
        v[j] = static_cast<T>(cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g);
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        val[j] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

  void zero_grads() { params_.zero_grads(); }

  int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  ParamRegistry<T>& params_;
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace drumsmith::nn
