#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cbc {

struct Exec {
  int threads = 1;
};

// Runs body(i) for i in [0, n). Work is split in contiguous chunks; results
// must be written to per-index slots so the outcome is schedule independent.
// The first exception thrown by any worker is rethrown.
template <class Body>
void parallel_for(std::size_t n, const Exec& exec, Body&& body) {
  const std::size_t t = std::max<std::size_t>(1, std::min<std::size_t>(exec.threads, n));
  if (t == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr err;
  std::mutex m;
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (std::size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = n * w / t, hi = n * (w + 1) / t;
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace cbc
