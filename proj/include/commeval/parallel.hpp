#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace commeval {

// Runs fn(i) for i in [0, n) on at most `max_in_flight` threads. Workers stop
// picking up new indices once `fn` throws or `stop()` returns true; the first
// exception (lowest index) is rethrown after all workers join.
template <typename Fn, typename Stop>
void bounded_parallel_for(std::size_t n, std::size_t max_in_flight, Fn&& fn, Stop&& stop) {
  if (n == 0) return;
  const std::size_t workers = std::max<std::size_t>(1, std::min(n, max_in_flight));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> halted{false};
  std::mutex error_mutex;
  std::size_t error_index = n;
  std::exception_ptr error;

  auto body = [&] {
    while (!halted.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
        halted = true;
      }
      if (stop()) halted = true;
    }
  };

  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

template <typename Fn>
void bounded_parallel_for(std::size_t n, std::size_t max_in_flight, Fn&& fn) {
  bounded_parallel_for(n, max_in_flight, std::forward<Fn>(fn), [] { return false; });
}

}  // namespace commeval
