#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tunesmith {

// Applies `fn(i)` for i in [0, count) on at most `max_in_flight` threads and
// returns the results in index order. The first exception thrown by any call
// is rethrown after all workers stop.
template <typename Fn>
auto parallel_map(std::size_t count, std::size_t max_in_flight, Fn&& fn) {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> results(count);
  if (count == 0) return results;
  const std::size_t workers = std::clamp<std::size_t>(max_in_flight, 1, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        results[i] = fn(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace tunesmith
