#pragma once

// Minimal define-by-run autograd core. Values are contiguous row-major
// buffers; ops build a tape of nodes, backward() walks it in reverse
// topological order. Templated on the scalar type: float for training,
// double for finite-difference gradient checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "drumsmith/errors.hpp"

namespace drumsmith::nn {

using Shape = std::vector<int>;

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}
inline bool grad_enabled() { return grad_mode_flag(); }

// RAII guard disabling tape construction (inference mode).
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_mode_flag()) { grad_mode_flag() = false; }
  ~NoGradGuard() { grad_mode_flag() = prev; }
};

template <class T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // sized lazily
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

template <class T>
using NodePtr = std::shared_ptr<Node<T>>;

template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr<T> n) : node_(std::move(n)) {}

  static Var leaf(Shape shape, std::vector<T> value, bool requires_grad = false) {
    if (numel(shape) != static_cast<int64_t>(value.size())) {
      throw ShapeMismatch("leaf: shape " + shape_str(shape) + " does not match data size " +
                          std::to_string(value.size()));
    }
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->requires_grad = requires_grad && grad_enabled();
    return Var(std::move(n));
  }

  static Var scalar(T v) { return leaf({1}, {v}); }

  // Var is a handle: constness is shallow, so value/grad stay writable
  // through a const Var (the backward closures rely on this).
  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[i]; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int64_t size() const { return static_cast<int64_t>(node_->value.size()); }
  std::vector<T>& value() const { return node_->value; }
  std::vector<T>& grad() const { node_->ensure_grad(); return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  const NodePtr<T>& node() const { return node_; }
  T item() const {
    if (node_->value.size() != 1) throw ShapeMismatch("item() on non-scalar");
    return node_->value[0];
  }

  void zero_grad() const {
    if (node_) node_->grad.assign(node_->value.size(), T(0));
  }

  // Reverse-mode sweep from a scalar root.
  void backward() const {
    if (node_->value.size() != 1) throw ShapeMismatch("backward() requires a scalar root");
    // iterative post-order DFS over grad-requiring nodes
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> visited;
    std::vector<std::pair<Node<T>*, size_t>> stack;
    if (!node_->requires_grad) return;
    stack.push_back({node_.get(), 0});
    visited.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, idx] = stack.back();
      if (idx < n->parents.size()) {
        Node<T>* p = n->parents[idx++].get();
        if (p->requires_grad && !visited.count(p)) {
          visited.insert(p);
          stack.push_back({p, 0});
        }
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    node_->ensure_grad();
    node_->grad[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node<T>* n = *it;
      if (n->backward_fn) {
        n->backward_fn(*n);
        n->backward_fn = nullptr;  // release captured buffers as we go
      }
    }
  }

 private:
  NodePtr<T> node_;
};

// Builds an op node; the backward closure receives the finished node and
// accumulates into parent grads (only parents that require grad are kept).
template <class T, class F>
Var<T> make_op(Shape shape, std::vector<T> value, std::vector<Var<T>> parents, F&& backward) {
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  if (grad_enabled()) {
    bool rg = false;
    for (const auto& p : parents) rg = rg || p.node()->requires_grad;
    if (rg) {
      n->requires_grad = true;
      n->parents.reserve(parents.size());
      for (auto& p : parents) n->parents.push_back(p.node());
      n->backward_fn = std::forward<F>(backward);
    }
  }
  return Var<T>(std::move(n));
}

// ---- GEMM kernels (C += alpha * op(A) op(B)) -----------------------------

template <class T>
void gemm_nn(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N, T alpha = T(1)) {
  for (int64_t i = 0; i < M; ++i) {
    const T* a = A + i * K;
    T* c = C + i * N;
    for (int64_t k = 0; k < K; ++k) {
      const T aik = a[k] * alpha;
      if (aik == T(0)) continue;
      const T* b = B + k * N;
      for (int64_t j = 0; j < N; ++j) c[j] += aik * b[j];
    }
  }
}

// C [K,N] += alpha * A^T B with A [M,K], B [M,N]
template <class T>
void gemm_tn(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N, T alpha = T(1)) {
  for (int64_t m = 0; m < M; ++m) {
    const T* a = A + m * K;
    const T* b = B + m * N;
    for (int64_t k = 0; k < K; ++k) {
      const T amk = a[k] * alpha;
      if (amk == T(0)) continue;
      T* c = C + k * N;
      for (int64_t j = 0; j < N; ++j) c[j] += amk * b[j];
    }
  }
}

// C [M,N] += alpha * A B^T with A [M,K], B [N,K]
template <class T>
void gemm_nt(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N, T alpha = T(1)) {
  thread_local std::vector<T> scratch;
  scratch.assign(static_cast<size_t>(K) * N, T(0));
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t k = 0; k < K; ++k) scratch[k * N + n] = B[n * K + k];
  }
  gemm_nn(A, scratch.data(), C, M, K, N, alpha);
}

// ---- shape helpers --------------------------------------------------------

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw ShapeMismatch(msg);
}

// ---- elementwise ops ------------------------------------------------------

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check(a.shape() == b.shape(), "add: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<T> v(a.value());
  for (size_t i = 0; i < v.size(); ++i) v[i] += b.value()[i];
  return make_op<T>(a.shape(), std::move(v), {a, b}, [a, b](Node<T>& self) mutable {
    if (a.node()->requires_grad) {
      auto& g = a.grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (b.node()->requires_grad) {
      auto& g = b.grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check(a.shape() == b.shape(), "sub: shape mismatch");
  std::vector<T> v(a.value());
  for (size_t i = 0; i < v.size(); ++i) v[i] -= b.value()[i];
  return make_op<T>(a.shape(), std::move(v), {a, b}, [a, b](Node<T>& self) mutable {
    if (a.node()->requires_grad) {
      auto& g = a.grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (b.node()->requires_grad) {
      auto& g = b.grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check(a.shape() == b.shape(), "mul: shape mismatch");
  std::vector<T> v(a.value());
  for (size_t i = 0; i < v.size(); ++i) v[i] *= b.value()[i];
  return make_op<T>(a.shape(), std::move(v), {a, b}, [a, b](Node<T>& self) mutable {
    if (a.node()->requires_grad) {
      auto& g = a.grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * b.value()[i];
    }
    if (b.node()->requires_grad) {
      auto& g = b.grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * a.value()[i];
    }
  });
}

template <class T>
Var<T> scale(const Var<T>& a, T c) {
  std::vector<T> v(a.value());
  for (T& x : v) x *= c;
  return make_op<T>(a.shape(), std::move(v), {a}, [a, c](Node<T>& self) mutable {
    auto& g = a.grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * c;
  });
}

template <class T>
Var<T> relu(const Var<T>& a) {
  std::vector<T> v(a.value());
  for (T& x : v) x = x > T(0) ? x : T(0);
  return make_op<T>(a.shape(), std::move(v), {a}, [a](Node<T>& self) mutable {
    auto& g = a.grad();
    const auto& x = a.value();
    for (size_t i = 0; i < g.size(); ++i) {
      if (x[i] > T(0)) g[i] += self.grad[i];
    }
  });
}

template <class T>
Var<T> sigmoid(const Var<T>& a) {
  std::vector<T> v(a.value());
  for (T& x : v) {
    x = x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
  }
  return make_op<T>(a.shape(), std::move(v), {a}, [a](Node<T>& self) mutable {
    auto& g = a.grad();
    for (size_t i = 0; i < g.size(); ++i) {
      const T y = self.value[i];
      g[i] += self.grad[i] * y * (T(1) - y);
    }
  });
}

// ---- linear algebra -------------------------------------------------------

// x [..., K] times weight [K, N]
template <class T>
Var<T> matmul(const Var<T>& x, const Var<T>& w) {
  check(w.rank() == 2, "matmul: weight must be 2-D");
  const int K = w.dim(0), N = w.dim(1);
  check(x.rank() >= 1 && x.shape().back() == K,
        "matmul: " + shape_str(x.shape()) + " x " + shape_str(w.shape()));
  const int64_t rows = x.size() / K;
  Shape out_shape(x.shape());
  out_shape.back() = N;
  std::vector<T> v(static_cast<size_t>(rows) * N, T(0));
  gemm_nn(x.value().data(), w.value().data(), v.data(), rows, K, N);
  return make_op<T>(std::move(out_shape), std::move(v), {x, w},
                    [x, w, rows, K, N](Node<T>& self) mutable {
                      if (x.node()->requires_grad) {
                        gemm_nt(self.grad.data(), w.value().data(), x.grad().data(), rows, N, K);
                      }
                      if (w.node()->requires_grad) {
                        gemm_tn(x.value().data(), self.grad.data(), w.grad().data(), rows, K, N);
                      }
                    });
}

// batched matmul: a [..., M, K] x b [..., K, N] (or [..., N, K] with transB),
// identical leading dims, optional scalar factor folded into the product.
template <class T>
Var<T> bmm(const Var<T>& a, const Var<T>& b, bool transB = false, T alpha = T(1)) {
  check(a.rank() >= 2 && b.rank() == a.rank(), "bmm: rank mismatch");
  for (int i = 0; i + 2 < a.rank(); ++i) {
    check(a.dim(i) == b.dim(i), "bmm: batch dims differ");
  }
  const int M = a.dim(a.rank() - 2);
  const int K = a.dim(a.rank() - 1);
  const int N = transB ? b.dim(b.rank() - 2) : b.dim(b.rank() - 1);
  const int bK = transB ? b.dim(b.rank() - 1) : b.dim(b.rank() - 2);
  check(bK == K, "bmm: inner dims differ");
  int64_t batches = 1;
  for (int i = 0; i + 2 < a.rank(); ++i) batches *= a.dim(i);

  Shape out_shape(a.shape());
  out_shape[out_shape.size() - 1] = N;
  std::vector<T> v(batches * static_cast<int64_t>(M) * N, T(0));
  const int64_t a_sz = static_cast<int64_t>(M) * K;
  const int64_t b_sz = static_cast<int64_t>(K) * N;
  const int64_t c_sz = static_cast<int64_t>(M) * N;
  for (int64_t g = 0; g < batches; ++g) {
    const T* A = a.value().data() + g * a_sz;
    const T* B = b.value().data() + g * b_sz;
    T* C = v.data() + g * c_sz;
    if (transB) {
      gemm_nt(A, B, C, M, K, N, alpha);
    } else {
      gemm_nn(A, B, C, M, K, N, alpha);
    }
  }
  return make_op<T>(std::move(out_shape), std::move(v), {a, b},
                    [a, b, transB, alpha, batches, M, K, N, a_sz, b_sz, c_sz](Node<T>& self) mutable {
                      for (int64_t g = 0; g < batches; ++g) {
                        const T* A = a.value().data() + g * a_sz;
                        const T* B = b.value().data() + g * b_sz;
                        const T* dC = self.grad.data() + g * c_sz;
                        if (a.node()->requires_grad) {
                          T* dA = a.grad().data() + g * a_sz;
                          if (transB) {
                            gemm_nn(dC, B, dA, M, N, K, alpha);
                          } else {
                            gemm_nt(dC, B, dA, M, N, K, alpha);
                          }
                        }
                        if (b.node()->requires_grad) {
                          T* dB = b.grad().data() + g * b_sz;
                          if (transB) {
                            gemm_tn(dC, A, dB, M, N, K, alpha);  // dB [N,K]
                          } else {
                            gemm_tn(A, dC, dB, M, K, N, alpha);  // dB [K,N]
                          }
                        }
                      }
                    });
}

template <class T>
Var<T> add_bias(const Var<T>& x, const Var<T>& b) {
  check(b.rank() == 1 && x.shape().back() == b.dim(0), "add_bias: bias dim mismatch");
  const int D = b.dim(0);
  const int64_t rows = x.size() / D;
  std::vector<T> v(x.value());
  for (int64_t r = 0; r < rows; ++r) {
    T* row = v.data() + r * D;
    for (int j = 0; j < D; ++j) row[j] += b.value()[j];
  }
  return make_op<T>(x.shape(), std::move(v), {x, b}, [x, b, rows, D](Node<T>& self) mutable {
    if (x.node()->requires_grad) {
      auto& g = x.grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (b.node()->requires_grad) {
      auto& g = b.grad();
      for (int64_t r = 0; r < rows; ++r) {
        const T* row = self.grad.data() + r * D;
        for (int j = 0; j < D; ++j) g[j] += row[j];
      }
    }
  });
}

// ---- shape ops ------------------------------------------------------------

template <class T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  check(numel(shape) == x.size(), "reshape: numel mismatch");
  std::vector<T> v(x.value());
  return make_op<T>(std::move(shape), std::move(v), {x}, [x](Node<T>& self) mutable {
    auto& g = x.grad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

// [d0,d1,d2,d3] -> [d0,d2,d1,d3]; self-inverse.
template <class T>
Var<T> permute_0213(const Var<T>& x) {
  check(x.rank() == 4, "permute_0213: rank must be 4");
  const int d0 = x.dim(0), d1 = x.dim(1), d2 = x.dim(2), d3 = x.dim(3);
  std::vector<T> v(x.value().size());
  const T* src = x.value().data();
  for (int a = 0; a < d0; ++a) {
    for (int b = 0; b < d1; ++b) {
      for (int c = 0; c < d2; ++c) {
        const T* s = src + (((static_cast<int64_t>(a) * d1 + b) * d2 + c) * d3);
        T* d = v.data() + (((static_cast<int64_t>(a) * d2 + c) * d1 + b) * d3);
        std::copy(s, s + d3, d);
      }
    }
  }
  return make_op<T>({d0, d2, d1, d3}, std::move(v), {x},
                    [x, d0, d1, d2, d3](Node<T>& self) mutable {
                      auto& g = x.grad();
                      for (int a = 0; a < d0; ++a) {
                        for (int b = 0; b < d1; ++b) {
                          for (int c = 0; c < d2; ++c) {
                            const T* s =
                                self.grad.data() + (((static_cast<int64_t>(a) * d2 + c) * d1 + b) * d3);
                            T* d = g.data() + (((static_cast<int64_t>(a) * d1 + b) * d2 + c) * d3);
                            for (int i = 0; i < d3; ++i) d[i] += s[i];
                          }
                        }
                      }
                    });
}

// [B,T,C] -> [B,C,T]
template <class T>
Var<T> transpose_12(const Var<T>& x) {
  check(x.rank() == 3, "transpose_12: rank must be 3");
  const int B = x.dim(0), Tn = x.dim(1), C = x.dim(2);
  std::vector<T> v(x.value().size());
  for (int b = 0; b < B; ++b) {
    const T* src = x.value().data() + static_cast<int64_t>(b) * Tn * C;
    T* dst = v.data() + static_cast<int64_t>(b) * Tn * C;
    for (int t = 0; t < Tn; ++t) {
      for (int c = 0; c < C; ++c) dst[static_cast<int64_t>(c) * Tn + t] = src[static_cast<int64_t>(t) * C + c];
    }
  }
  return make_op<T>({B, C, Tn}, std::move(v), {x}, [x, B, Tn, C](Node<T>& self) mutable {
    auto& g = x.grad();
    for (int b = 0; b < B; ++b) {
      const T* src = self.grad.data() + static_cast<int64_t>(b) * Tn * C;
      T* dst = g.data() + static_cast<int64_t>(b) * Tn * C;
      for (int t = 0; t < Tn; ++t) {
        for (int c = 0; c < C; ++c) dst[static_cast<int64_t>(t) * C + c] += src[static_cast<int64_t>(c) * Tn + t];
      }
    }
  });
}

template <class T>
Var<T> concat_last(const Var<T>& a, const Var<T>& b) {
  check(a.rank() == b.rank(), "concat_last: rank mismatch");
  for (int i = 0; i + 1 < a.rank(); ++i) check(a.dim(i) == b.dim(i), "concat_last: dims differ");
  const int Da = a.shape().back(), Db = b.shape().back();
  const int64_t rows = a.size() / Da;
  Shape out_shape(a.shape());
  out_shape.back() = Da + Db;
  std::vector<T> v(static_cast<size_t>(rows) * (Da + Db));
  for (int64_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().data() + r * Da, Da, v.data() + r * (Da + Db));
    std::copy_n(b.value().data() + r * Db, Db, v.data() + r * (Da + Db) + Da);
  }
  return make_op<T>(std::move(out_shape), std::move(v), {a, b},
                    [a, b, rows, Da, Db](Node<T>& self) mutable {
                      if (a.node()->requires_grad) {
                        auto& g = a.grad();
                        for (int64_t r = 0; r < rows; ++r) {
                          const T* s = self.grad.data() + r * (Da + Db);
                          for (int i = 0; i < Da; ++i) g[r * Da + i] += s[i];
                        }
                      }
                      if (b.node()->requires_grad) {
                        auto& g = b.grad();
                        for (int64_t r = 0; r < rows; ++r) {
                          const T* s = self.grad.data() + r * (Da + Db) + Da;
                          for (int i = 0; i < Db; ++i) g[r * Db + i] += s[i];
                        }
                      }
                    });
}

// ---- normalization / softmax ----------------------------------------------

template <class T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias, T eps = T(1e-5)) {
  const int D = x.shape().back();
  check(gain.rank() == 1 && gain.dim(0) == D && bias.rank() == 1 && bias.dim(0) == D,
        "layer_norm: affine params must be [D]");
  const int64_t rows = x.size() / D;
  std::vector<T> v(x.value().size());
  auto mean_v = std::make_shared<std::vector<T>>(rows);
  auto rstd_v = std::make_shared<std::vector<T>>(rows);
  for (int64_t r = 0; r < rows; ++r) {
    const T* row = x.value().data() + r * D;
    T mean = std::accumulate(row, row + D, T(0)) / D;
    T var = T(0);
    for (int j = 0; j < D; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= D;
    const T rstd = T(1) / std::sqrt(var + eps);
    (*mean_v)[r] = mean;
    (*rstd_v)[r] = rstd;
    T* out = v.data() + r * D;
    for (int j = 0; j < D; ++j) {
      out[j] = (row[j] - mean) * rstd * gain.value()[j] + bias.value()[j];
    }
  }
  return make_op<T>(x.shape(), std::move(v), {x, gain, bias},
                    [x, gain, bias, rows, D, mean_v, rstd_v](Node<T>& self) mutable {
                      for (int64_t r = 0; r < rows; ++r) {
                        const T* xr = x.value().data() + r * D;
                        const T* dy = self.grad.data() + r * D;
                        const T mean = (*mean_v)[r];
                        const T rstd = (*rstd_v)[r];
                        T sum_dxhat = T(0), sum_dxhat_xhat = T(0);
                        for (int j = 0; j < D; ++j) {
                          const T xhat = (xr[j] - mean) * rstd;
                          const T dxhat = dy[j] * gain.value()[j];
                          sum_dxhat += dxhat;
                          sum_dxhat_xhat += dxhat * xhat;
                        }
                        if (x.node()->requires_grad) {
                          T* gx = x.grad().data() + r * D;
                          for (int j = 0; j < D; ++j) {
                            const T xhat = (xr[j] - mean) * rstd;
                            const T dxhat = dy[j] * gain.value()[j];
                            gx[j] += rstd * (dxhat - sum_dxhat / D - xhat * sum_dxhat_xhat / D);
                          }
                        }
                        if (gain.node()->requires_grad) {
                          auto& gg = gain.grad();
                          for (int j = 0; j < D; ++j) {
                            gg[j] += dy[j] * (xr[j] - mean) * rstd;
                          }
                        }
                        if (bias.node()->requires_grad) {
                          auto& gb = bias.grad();
                          for (int j = 0; j < D; ++j) gb[j] += dy[j];
                        }
                      }
                    });
}

namespace detail {

template <class T>
void softmax_backward_rows(const std::vector<T>& y, const std::vector<T>& dy, std::vector<T>& dx,
                           int64_t rows, int D) {
  for (int64_t r = 0; r < rows; ++r) {
    const T* yr = y.data() + r * D;
    const T* dyr = dy.data() + r * D;
    T dot = T(0);
    for (int j = 0; j < D; ++j) dot += yr[j] * dyr[j];
    T* dxr = dx.data() + r * D;
    for (int j = 0; j < D; ++j) dxr[j] += yr[j] * (dyr[j] - dot);
  }
}

}  // namespace detail

// softmax over an arbitrary axis; rows of that axis sum to 1
template <class T>
Var<T> softmax(const Var<T>& x, int axis) {
  if (axis < 0) axis += x.rank();
  check(axis >= 0 && axis < x.rank(), "softmax: bad axis");
  const int L = x.dim(axis);
  int64_t inner = 1;
  for (int i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const int64_t outer = x.size() / (L * inner);
  std::vector<T> v(x.value().size());
  const T* src = x.value().data();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t in = 0; in < inner; ++in) {
      const int64_t base = o * L * inner + in;
      T mx = src[base];
      for (int j = 1; j < L; ++j) mx = std::max(mx, src[base + j * inner]);
      T sum = T(0);
      for (int j = 0; j < L; ++j) {
        const T e = std::exp(src[base + j * inner] - mx);
        v[base + j * inner] = e;
        sum += e;
      }
      for (int j = 0; j < L; ++j) v[base + j * inner] /= sum;
    }
  }
  return make_op<T>(x.shape(), std::move(v), {x},
                    [x, L, inner, outer](Node<T>& self) mutable {
                      auto& dx = x.grad();
                      for (int64_t o = 0; o < outer; ++o) {
                        for (int64_t in = 0; in < inner; ++in) {
                          const int64_t base = o * L * inner + in;
                          T dot = T(0);
                          for (int j = 0; j < L; ++j) {
                            dot += self.value[base + j * inner] * self.grad[base + j * inner];
                          }
                          for (int j = 0; j < L; ++j) {
                            dx[base + j * inner] += self.value[base + j * inner] *
                                                    (self.grad[base + j * inner] - dot);
                          }
                        }
                      }
                    });
}

template <class T>
Var<T> softmax_last(const Var<T>& x) {
  return softmax(x, x.rank() - 1);
}

// Causal softmax over the last dim of [..., Tq, Tk]: query i attends to keys
// j <= i + (Tk - Tq). Masked entries come out exactly 0.
template <class T>
Var<T> softmax_causal(const Var<T>& x) {
  check(x.rank() >= 2, "softmax_causal: rank must be >= 2");
  const int Tq = x.dim(x.rank() - 2);
  const int Tk = x.dim(x.rank() - 1);
  const int offset = Tk - Tq;
  check(offset >= 0, "softmax_causal: more queries than keys");
  const int64_t rows = x.size() / Tk;
  std::vector<T> v(x.value().size(), T(0));
  const T* src = x.value().data();
  for (int64_t r = 0; r < rows; ++r) {
    const int i = static_cast<int>(r % Tq);
    const int allowed = i + offset + 1;  // keys [0, allowed)
    const T* xr = src + r * Tk;
    T* yr = v.data() + r * Tk;
    T mx = xr[0];
    for (int j = 1; j < allowed; ++j) mx = std::max(mx, xr[j]);
    T sum = T(0);
    for (int j = 0; j < allowed; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    for (int j = 0; j < allowed; ++j) yr[j] /= sum;
  }
  return make_op<T>(x.shape(), std::move(v), {x}, [x, rows, Tk](Node<T>& self) mutable {
    auto& dx = x.grad();
    detail::softmax_backward_rows(self.value, self.grad, dx, rows, Tk);
  });
}

// ---- gathers / pooling ------------------------------------------------------

// ids indexes rows of table [V, D]; result [batch_shape..., D]
template <class T>
Var<T> embedding(const Var<T>& table, std::vector<int> ids, Shape batch_shape) {
  check(table.rank() == 2, "embedding: table must be [V,D]");
  check(numel(batch_shape) == static_cast<int64_t>(ids.size()), "embedding: ids size mismatch");
  const int V = table.dim(0), D = table.dim(1);
  for (int id : ids) {
    if (id < 0 || id >= V) throw TokenOutOfRange("embedding id " + std::to_string(id));
  }
  std::vector<T> v(ids.size() * static_cast<size_t>(D));
  for (size_t i = 0; i < ids.size(); ++i) {
    std::copy_n(table.value().data() + static_cast<int64_t>(ids[i]) * D, D, v.data() + i * D);
  }
  Shape out_shape(batch_shape);
  out_shape.push_back(D);
  return make_op<T>(std::move(out_shape), std::move(v), {table},
                    [table, ids = std::move(ids), D](Node<T>& self) mutable {
                      auto& g = table.grad();
                      for (size_t i = 0; i < ids.size(); ++i) {
                        const T* s = self.grad.data() + i * D;
                        T* d = g.data() + static_cast<int64_t>(ids[i]) * D;
                        for (int j = 0; j < D; ++j) d[j] += s[j];
                      }
                    });
}

// global average over axis 1 of [B,T,D]
template <class T>
Var<T> mean_axis1(const Var<T>& x) {
  check(x.rank() == 3, "mean_axis1: rank must be 3");
  const int B = x.dim(0), Tn = x.dim(1), D = x.dim(2);
  std::vector<T> v(static_cast<size_t>(B) * D, T(0));
  for (int b = 0; b < B; ++b) {
    for (int t = 0; t < Tn; ++t) {
      const T* row = x.value().data() + (static_cast<int64_t>(b) * Tn + t) * D;
      T* out = v.data() + static_cast<int64_t>(b) * D;
      for (int j = 0; j < D; ++j) out[j] += row[j];
    }
  }
  for (T& e : v) e /= Tn;
  return make_op<T>({B, D}, std::move(v), {x}, [x, B, Tn, D](Node<T>& self) mutable {
    auto& g = x.grad();
    for (int b = 0; b < B; ++b) {
      const T* s = self.grad.data() + static_cast<int64_t>(b) * D;
      for (int t = 0; t < Tn; ++t) {
        T* d = g.data() + (static_cast<int64_t>(b) * Tn + t) * D;
        for (int j = 0; j < D; ++j) d[j] += s[j] / Tn;
      }
    }
  });
}

template <class T>
Var<T> sum_all(const Var<T>& x) {
  T s = std::accumulate(x.value().begin(), x.value().end(), T(0));
  return make_op<T>({1}, {s}, {x}, [x](Node<T>& self) mutable {
    auto& g = x.grad();
    for (T& e : g) e += self.grad[0];
  });
}

template <class T>
Var<T> mean_all(const Var<T>& x) {
  const T n = static_cast<T>(x.size());
  T s = std::accumulate(x.value().begin(), x.value().end(), T(0)) / n;
  return make_op<T>({1}, {s}, {x}, [x, n](Node<T>& self) mutable {
    auto& g = x.grad();
    for (T& e : g) e += self.grad[0] / n;
  });
}

// ---- losses -----------------------------------------------------------------

// mean NLL over rows of logits [N, V]; rows whose target is ignore_index do
// not contribute. Fused softmax+CE: gradient is (softmax - onehot) / count.
template <class T>
Var<T> cross_entropy_logits(const Var<T>& logits, std::vector<int> targets,
                            int ignore_index = -1) {
  check(logits.rank() == 2, "cross_entropy: logits must be [N,V]");
  const int N = logits.dim(0), V = logits.dim(1);
  check(static_cast<int>(targets.size()) == N, "cross_entropy: target count mismatch");
  int64_t count = 0;
  T loss = T(0);
  for (int r = 0; r < N; ++r) {
    const int tgt = targets[r];
    if (tgt == ignore_index) continue;
    if (tgt < 0 || tgt >= V) throw TokenOutOfRange("target " + std::to_string(tgt));
    const T* row = logits.value().data() + static_cast<int64_t>(r) * V;
    T mx = row[0];
    for (int j = 1; j < V; ++j) mx = std::max(mx, row[j]);
    T sum = T(0);
    for (int j = 0; j < V; ++j) sum += std::exp(row[j] - mx);
    loss += (mx + std::log(sum)) - row[tgt];
    ++count;
  }
  if (count == 0) throw EmptyInput("cross_entropy: all targets ignored");
  loss /= static_cast<T>(count);
  return make_op<T>({1}, {loss}, {logits},
                    [logits, targets = std::move(targets), ignore_index, N, V,
                     count](Node<T>& self) mutable {
                      const T go = self.grad[0] / static_cast<T>(count);
                      auto& g = logits.grad();
                      for (int r = 0; r < N; ++r) {
                        const int tgt = targets[r];
                        if (tgt == ignore_index) continue;
                        const T* row = logits.value().data() + static_cast<int64_t>(r) * V;
                        T mx = row[0];
                        for (int j = 1; j < V; ++j) mx = std::max(mx, row[j]);
                        T sum = T(0);
                        for (int j = 0; j < V; ++j) sum += std::exp(row[j] - mx);
                        T* gr = g.data() + static_cast<int64_t>(r) * V;
                        for (int j = 0; j < V; ++j) {
                          const T p = std::exp(row[j] - mx) / sum;
                          gr[j] += go * (p - (j == tgt ? T(1) : T(0)));
                        }
                      }
                    });
}

// mean Huber loss against a constant target; quadratic within delta,
// linear beyond.
template <class T>
Var<T> huber(const Var<T>& pred, std::vector<T> target, T delta) {
  check(delta > T(0), "huber: delta must be positive");
  check(pred.size() == static_cast<int64_t>(target.size()), "huber: target size mismatch");
  const T n = static_cast<T>(pred.size());
  T loss = T(0);
  for (size_t i = 0; i < target.size(); ++i) {
    const T e = pred.value()[i] - target[i];
    const T a = std::abs(e);
    loss += a <= delta ? T(0.5) * e * e : delta * (a - T(0.5) * delta);
  }
  loss /= n;
  return make_op<T>({1}, {loss}, {pred},
                    [pred, target = std::move(target), delta, n](Node<T>& self) mutable {
                      const T go = self.grad[0] / n;
                      auto& g = pred.grad();
                      for (size_t i = 0; i < target.size(); ++i) {
                        const T e = pred.value()[i] - target[i];
                        g[i] += go * std::clamp(e, -delta, delta);
                      }
                    });
}

// ---- convolution / upsampling -----------------------------------------------

// x [B,T,Cin], w [K,Cin,Cout] (K odd, "same" zero padding), b [Cout]
template <class T>
Var<T> conv1d_same(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  check(x.rank() == 3 && w.rank() == 3 && b.rank() == 1, "conv1d: bad ranks");
  const int B = x.dim(0), Tn = x.dim(1), Cin = x.dim(2);
  const int K = w.dim(0), Cout = w.dim(2);
  check(w.dim(1) == Cin, "conv1d: channel mismatch");
  check(K % 2 == 1, "conv1d: kernel must be odd");
  check(b.dim(0) == Cout, "conv1d: bias mismatch");
  const int pad = K / 2;
  std::vector<T> v(static_cast<size_t>(B) * Tn * Cout);
  for (int64_t i = 0; i < static_cast<int64_t>(B) * Tn; ++i) {
    std::copy_n(b.value().data(), Cout, v.data() + i * Cout);
  }
  for (int bi = 0; bi < B; ++bi) {
    const T* xb = x.value().data() + static_cast<int64_t>(bi) * Tn * Cin;
    T* yb = v.data() + static_cast<int64_t>(bi) * Tn * Cout;
    for (int k = 0; k < K; ++k) {
      // y[t] += x[t + k - pad] * w[k]
      const int shift = k - pad;
      const int t0 = std::max(0, -shift);
      const int t1 = std::min(Tn, Tn - shift);
      if (t1 <= t0) continue;
      gemm_nn(xb + static_cast<int64_t>(t0 + shift) * Cin,
              w.value().data() + static_cast<int64_t>(k) * Cin * Cout,
              yb + static_cast<int64_t>(t0) * Cout, t1 - t0, Cin, Cout);
    }
  }
  return make_op<T>({B, Tn, Cout}, std::move(v), {x, w, b},
                    [x, w, b, B, Tn, Cin, K, Cout, pad](Node<T>& self) mutable {
                      for (int bi = 0; bi < B; ++bi) {
                        const T* xb = x.value().data() + static_cast<int64_t>(bi) * Tn * Cin;
                        const T* dyb = self.grad.data() + static_cast<int64_t>(bi) * Tn * Cout;
                        for (int k = 0; k < K; ++k) {
                          const int shift = k - pad;
                          const int t0 = std::max(0, -shift);
                          const int t1 = std::min(Tn, Tn - shift);
                          if (t1 <= t0) continue;
                          if (x.node()->requires_grad) {
                            gemm_nt(dyb + static_cast<int64_t>(t0) * Cout,
                                    w.value().data() + static_cast<int64_t>(k) * Cin * Cout,
                                    x.grad().data() + (static_cast<int64_t>(bi) * Tn + t0 + shift) * Cin,
                                    t1 - t0, Cout, Cin);
                          }
                          if (w.node()->requires_grad) {
                            gemm_tn(xb + static_cast<int64_t>(t0 + shift) * Cin,
                                    dyb + static_cast<int64_t>(t0) * Cout,
                                    w.grad().data() + static_cast<int64_t>(k) * Cin * Cout,
                                    t1 - t0, Cin, Cout);
                          }
                        }
                        if (b.node()->requires_grad) {
                          auto& gb = b.grad();
                          for (int t = 0; t < Tn; ++t) {
                            const T* row = dyb + static_cast<int64_t>(t) * Cout;
                            for (int o = 0; o < Cout; ++o) gb[o] += row[o];
                          }
                        }
                      }
                    });
}

// nearest-neighbor 2x upsampling along time: [B,T,C] -> [B,2T,C]
template <class T>
Var<T> upsample2_time(const Var<T>& x) {
  check(x.rank() == 3, "upsample2: rank must be 3");
  const int B = x.dim(0), Tn = x.dim(1), C = x.dim(2);
  std::vector<T> v(static_cast<size_t>(B) * 2 * Tn * C);
  for (int b = 0; b < B; ++b) {
    for (int t = 0; t < Tn; ++t) {
      const T* s = x.value().data() + (static_cast<int64_t>(b) * Tn + t) * C;
      T* d = v.data() + (static_cast<int64_t>(b) * 2 * Tn + 2 * t) * C;
      std::copy_n(s, C, d);
      std::copy_n(s, C, d + C);
    }
  }
  return make_op<T>({B, 2 * Tn, C}, std::move(v), {x}, [x, B, Tn, C](Node<T>& self) mutable {
    auto& g = x.grad();
    for (int b = 0; b < B; ++b) {
      for (int t = 0; t < Tn; ++t) {
        const T* d = self.grad.data() + (static_cast<int64_t>(b) * 2 * Tn + 2 * t) * C;
        T* s = g.data() + (static_cast<int64_t>(b) * Tn + t) * C;
        for (int c = 0; c < C; ++c) s[c] += d[c] + d[C + c];
      }
    }
  });
}

// ---- constants ----------------------------------------------------------------

// Standard sinusoidal positions: even dims sin, odd dims cos, frequency
// 10000^(-2i/D). Row-major [T, D].
template <class T>
std::vector<T> sinusoidal_positions(int t_len, int dim) {
  if (dim % 2 != 0) throw ShapeMismatch("sinusoidal_positions: dim must be even");
  std::vector<T> out(static_cast<size_t>(t_len) * dim);
  for (int t = 0; t < t_len; ++t) {
    for (int i = 0; i < dim / 2; ++i) {
      const double freq = std::pow(10000.0, -2.0 * i / dim);
      out[static_cast<size_t>(t) * dim + 2 * i] = static_cast<T>(std::sin(t * freq));
      out[static_cast<size_t>(t) * dim + 2 * i + 1] = static_cast<T>(std::cos(t * freq));
    }
  }
  return out;
}

}  // namespace drumsmith::nn
