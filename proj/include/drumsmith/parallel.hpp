#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace drumsmith {

// Global cap on worker threads (CLI --threads). Default: hardware cores.
int thread_limit();
void set_thread_limit(int n);

// Chunked parallel loop over [0, n); fn(i) must only write state owned by
// index i. Runs inline when the limit is 1 or the range is small.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace drumsmith
