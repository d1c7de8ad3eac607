#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace covreg {

// Worker cap: min(hardware, COVREG_THREADS). Results must not depend on the
// thread count, so callers write into preallocated, index-addressed slots.
inline unsigned thread_budget() {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("COVREG_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<unsigned>(cap) < n) n = static_cast<unsigned>(cap);
  }
  return n;
}

inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const unsigned workers = std::min<std::size_t>(thread_budget(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace covreg
