#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace drumsmith {

// Seeded PRNG with self-contained distributions so that streams are
// reproducible independent of the standard library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed == 0 ? 0x9E3779B97F4A7C15ull : seed) {
    // warm up so nearby seeds decorrelate
    for (int i = 0; i < 4; ++i) next_u64();
  }

  uint64_t next_u64() {
    // xorshift* variant
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1Dull;
  }

  // uniform double in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  float uniform_f(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

  // uniform integer in [0, n), n > 0
  uint64_t uniform_int(uint64_t n) {
    // rejection sampling to avoid modulo bias
    const uint64_t limit = ~uint64_t(0) - (~uint64_t(0) % n);
    uint64_t x;
    do { x = next_u64(); } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // index drawn from an (unnormalized is fine) nonnegative weight vector
  template <class T>
  size_t categorical(std::span<const T> weights) {
    double total = 0;
    for (T w : weights) total += static_cast<double>(w);
    double u = uniform() * total;
    double acc = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
      acc += static_cast<double>(weights[i]);
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

  // Fisher-Yates
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_int(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices out of [0, n), in selection order
  std::vector<size_t> sample_without_replacement(size_t n, size_t k) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    // partial Fisher-Yates
    for (size_t i = 0; i < k && i + 1 < n; ++i) {
      size_t j = i + uniform_int(n - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k < n ? k : n);
    return idx;
  }

  // independent stream derived from this seed (splitmix-style), does not
  // advance this generator
  Rng fork(uint64_t stream) const {
    uint64_t z = state_ + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return Rng(z ^ (z >> 31));
  }

 private:
  uint64_t state_;
};

}  // namespace drumsmith
