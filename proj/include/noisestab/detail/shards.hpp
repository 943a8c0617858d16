#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace noisestab {

template <typename Fn>
void for_each_shard(std::uint64_t shards, Fn&& fn) {
  const auto workers = static_cast<std::uint64_t>(
      std::min<std::uint64_t>(worker_count(), shards));
  if (workers <= 1) {
    for (std::uint64_t s = 0; s < shards; ++s) fn(s);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::uint64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::uint64_t s = next++; s < shards; s = next++) {
        try {
          fn(s);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace noisestab
