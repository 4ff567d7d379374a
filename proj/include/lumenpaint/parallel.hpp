#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lumenpaint {

/// Process-wide worker cap. Results never depend on it: every parallel loop in
/// the library writes disjoint outputs or reduces over fixed-size chunks.
int worker_count();
void set_worker_count(int workers);

namespace detail {
inline thread_local bool in_parallel_region = false;
}

/// Runs body(i) for i in [0, n). Items are claimed dynamically; callers must
/// make body(i) depend only on i. Nested calls run serially.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const auto workers = static_cast<std::size_t>(
      std::max(1, std::min<int>(worker_count(), static_cast<int>(n))));
  if (workers <= 1 || detail::in_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    const bool outer = detail::in_parallel_region;
    detail::in_parallel_region = true;
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
    detail::in_parallel_region = outer;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

/// Splits [0, n) into chunks of fixed size (independent of the worker count)
/// and runs body(begin, end, chunk_index) for each.
template <typename Body>
void parallel_chunks(std::size_t n, std::size_t chunk, Body&& body) {
  const std::size_t chunks = (n + chunk - 1) / chunk;
  parallel_for(chunks, [&](std::size_t c) {
    body(c * chunk, std::min(n, (c + 1) * chunk), c);
  });
}

}  // namespace lumenpaint
