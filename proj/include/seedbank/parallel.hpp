#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace seedbank {

/// Calls fn(chunk) for chunk in [0, chunks) on up to `threads` workers
/// (0: hardware concurrency). Callers write per-chunk results into slots
/// and reduce them in chunk order afterwards, which keeps results
/// independent of scheduling.
template <typename Fn>
void parallel_chunks(std::size_t chunks, unsigned threads, Fn&& fn) {
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      fn(c);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
        fn(c);
      }
    });
  }
}

}  // namespace seedbank
