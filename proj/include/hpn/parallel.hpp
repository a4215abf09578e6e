#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hpn {

inline int default_workers() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0,n) on `workers` threads with static block
// partitioning, so the work item -> thread assignment is a pure function of
// (n, workers). Rethrows the first exception encountered.
inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t)>& fn) {
  if (workers <= 0) workers = default_workers();
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nthreads = std::min<std::size_t>(workers, n);
  std::vector<std::thread> threads;
  threads.reserve(nthreads);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < nthreads; ++t) {
    threads.emplace_back([&, t] {
      std::size_t begin = n * t / nthreads;
      std::size_t end = n * (t + 1) / nthreads;
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hpn
