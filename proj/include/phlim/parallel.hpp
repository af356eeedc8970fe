#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace phlim {

/// Worker count: PHLIM_THREADS caps it, hardware concurrency is the default.
inline int thread_count() {
  static const int cached = [] {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    n = std::min(n, 8);
    if (const char* env = std::getenv("PHLIM_THREADS")) {
      const int req = std::atoi(env);
      if (req >= 1) n = req;
    }
    return n;
  }();
  return cached;
}

inline constexpr int kParallelChunks = 256;

inline std::size_t chunk_size_for(std::size_t n) {
  return std::max<std::size_t>(1, (n + kParallelChunks - 1) / kParallelChunks);
}

inline std::size_t chunk_count_for(std::size_t n) {
  const std::size_t c = chunk_size_for(n);
  return (n + c - 1) / c;
}

/// Run fn(chunk_index, begin, end) over fixed-size chunks of [0, n). The
/// chunk layout does not depend on the worker count, so per-chunk outputs
/// (and any in-order combination of them) are bit-reproducible under any
/// thread setting. fn must write only to disjoint slots or per-chunk
/// storage.
template <typename F>
void parallel_for_chunks(std::size_t n, F&& fn) {
  if (n == 0) return;
  const int nthreads = thread_count();
  const std::size_t chunk = chunk_size_for(n);
  if (nthreads == 1 || n < 4096) {
    for (std::size_t b = 0; b < n; b += chunk)
      fn(b / chunk, b, std::min(n, b + chunk));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(chunk);
      if (b >= n) return;
      fn(b / chunk, b, std::min(n, b + chunk));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nthreads - 1);
  for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

} // namespace phlim
