#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lrcone {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Work is split into
// fixed contiguous blocks, so which thread computes an index never changes
// the value computed there. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn &&fn)
{
  std::size_t w = static_cast<std::size_t>(std::max(1, workers));
  w = std::min(w, n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t b = 0; b < w; ++b) {
    std::size_t lo = n * b / w, hi = n * (b + 1) / w;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i)
          fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(m);
        if (!failure)
          failure = std::current_exception();
      }
    });
  }
  for (auto &t : pool)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace lrcone
