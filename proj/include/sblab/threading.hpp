#ifndef SBLAB_THREADING_HPP
#define SBLAB_THREADING_HPP

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace sblab {

// Runs fn(i) for i in [0, count) over a fixed block partition.  Each index is
// processed exactly once by a statically assigned worker, so results written
// to index-addressed slots are identical for any thread count.
inline void parallel_for(std::size_t count, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  if (threads <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline std::size_t default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

}  // namespace sblab

#endif
