#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace entcert {

// Global worker count; the CLI sets this from --threads, tests leave the
// default.  ENTCERT_THREADS overrides both.
inline int& worker_count() {
  static int count = [] {
    if (const char* env = std::getenv("ENTCERT_THREADS")) {
      int v = std::atoi(env);
      if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
  }();
  return count;
}

// Runs f(i) for i in [0, n).  Work is split into contiguous chunks, one per
// worker.  Results must be written to caller-owned slots so that any
// reduction can be performed deterministically afterwards.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  if (n == 0) return;
  const int workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      f(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
}

}  // namespace entcert
