#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace dartk {

namespace detail {
inline int& thread_cap() {
  static int cap = 1;
  return cap;
}
}  // namespace detail

inline void set_threads(int n) { detail::thread_cap() = n < 1 ? 1 : n; }
inline int threads() { return detail::thread_cap(); }

inline int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(i) for i in [0, n). Each index owns its outputs and is computed
// with a fixed internal order, so results are identical for any thread count.
template <class F>
void parallel_blocks(std::size_t n, F&& fn) {
  const int nthreads = threads();
  if (nthreads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::size_t count = static_cast<std::size_t>(nthreads) < n ? static_cast<std::size_t>(nthreads) : n;
  std::vector<std::thread> pool;
  pool.reserve(count - 1);
  for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace dartk
