// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FPSATTN_PARALLEL_H_
#define FPSATTN_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fpsattn {

// Runs fn(item, worker) for item in [0, n) on up to `threads` workers.
// Items are claimed dynamically; callers must make each item's output
// independent of which worker runs it. The first exception is rethrown.
template <typename Fn>
void ParallelFor(std::size_t n, std::size_t threads, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, std::size_t{0});
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i, w);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace fpsattn

#endif  // FPSATTN_PARALLEL_H_
