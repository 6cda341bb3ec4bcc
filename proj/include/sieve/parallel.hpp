// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIEVE_PARALLEL_HPP
#define SIEVE_PARALLEL_HPP

#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace sieve {

// Runs fn(i) for i in [0, n) on a small work pool. Each task owns its RNG
// stream and writes only its own slot, so results do not depend on thread
// scheduling; exceptions are rethrown on the caller thread.
template <typename F>
void run_pool(int threads, std::int64_t n, F&& fn) {
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  if (threads > n) threads = static_cast<int>(n);
  if (threads <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&]() {
      std::int64_t i;
      while ((i = next.fetch_add(1)) < n && !failed.load()) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) err = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace sieve

#endif  // SIEVE_PARALLEL_HPP
