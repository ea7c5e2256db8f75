#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace landau {

/// Worker cap: LANDAU_THREADS if set and positive, else the hardware count.
inline unsigned worker_count() {
  if (const char* env = std::getenv("LANDAU_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

// Each index is written by exactly one worker, so results never depend on the
// thread count. Reductions are done by callers in index order.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  unsigned workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(count / 4096, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk, hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace landau
