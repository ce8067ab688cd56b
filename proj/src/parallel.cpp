#include "drumsmith/parallel.hpp"

namespace drumsmith {

namespace {
int& limit_ref() {
  static int limit = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return limit;
}
}  // namespace

int thread_limit() { return limit_ref(); }

void set_thread_limit(int n) { limit_ref() = std::max(1, n); }

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
  const int workers = std::min<size_t>(thread_limit(), n);
  if (workers <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace drumsmith
