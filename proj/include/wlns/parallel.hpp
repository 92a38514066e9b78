#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace wlns::parallel {

namespace detail {
inline std::atomic<int>& thread_count() {
  static std::atomic<int> count{1};
  return count;
}
}  // namespace detail

inline void set_threads(int n) { detail::thread_count() = std::max(1, n); }
inline int threads() { return detail::thread_count(); }

/// Reads WLNS_THREADS; returns `fallback` when unset or malformed.
inline int threads_from_env(int fallback = 1) {
  const char* env = std::getenv("WLNS_THREADS");
  if (env == nullptr) return fallback;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || v < 1) return fallback;
  return static_cast<int>(v);
}

/// Calls fn(i) for i in [0, count). Work is split into contiguous static
/// blocks, so elementwise results never depend on the thread count. Do not
/// accumulate into shared state from `fn`.
template <class Fn>
void for_each_index(std::size_t count, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(threads());
  if (workers <= 1 || count < 4096) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t block = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(count, begin + block);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace wlns::parallel
