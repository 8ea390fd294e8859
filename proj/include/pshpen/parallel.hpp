#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace pshpen {

/// Runs body(i) for i in [0, count) on `threads` workers. Work items must
/// write only to their own slots; iteration order is unspecified but every
/// index runs exactly once. threads <= 1 runs inline.
inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      body(i);
    }
  };
  std::vector<std::thread> pool;
  const int k = std::min(threads, count);
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

/// Thread-count default: explicit value, else the CRR_THREADS environment
/// variable, else all hardware threads.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CRR_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::thread::hardware_concurrency());
}

}  // namespace pshpen
