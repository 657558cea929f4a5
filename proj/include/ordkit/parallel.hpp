#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace ordkit {

/// Calls fn(i) for i in [0, n), striding indices across `workers` threads.
/// fn must only write to per-index state.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&fn, w, n, workers] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
}

}  // namespace ordkit
