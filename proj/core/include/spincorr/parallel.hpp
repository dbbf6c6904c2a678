#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace spincorr {

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// Chunk boundaries depend only on (n, chunk_size), never on the thread count,
// so per-chunk results reduced in chunk order are bit-identical for any
// number of threads.
inline void parallel_chunks(std::uint64_t n, std::uint64_t chunk_size,
                            int threads,
                            const std::function<void(std::uint64_t, std::uint64_t,
                                                     std::uint64_t)>& fn) {
  if (n == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const std::uint64_t n_chunks = (n + chunk_size - 1) / chunk_size;
  if (threads <= 1 || n_chunks == 1) {
    for (std::uint64_t c = 0; c < n_chunks; ++c) {
      const std::uint64_t b = c * chunk_size;
      fn(c, b, std::min(n, b + chunk_size));
    }
    return;
  }
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      const std::uint64_t b = c * chunk_size;
      fn(c, b, std::min(n, b + chunk_size));
    }
  };
  std::vector<std::thread> pool;
  const int nt = std::min<std::uint64_t>(threads, n_chunks);
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

inline std::uint64_t chunk_count(std::uint64_t n, std::uint64_t chunk_size) {
  if (n == 0) return 0;
  if (chunk_size == 0) chunk_size = 1;
  return (n + chunk_size - 1) / chunk_size;
}

}  // namespace spincorr
