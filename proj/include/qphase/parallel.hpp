// parallel.hpp — Fixed-block work partitioning for trajectory ensembles.
// Work is split into blocks of fixed size; workers claim blocks through an
// atomic counter and write results into per-block slots, which the caller
// merges in block order.  Results are therefore independent of the worker
// count and of claim order.
#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace qphase {

// Worker count resolution: explicit argument, then QPHASE_THREADS, then
// hardware concurrency.
inline int resolve_workers(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("QPHASE_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? int(hw) : 1;
}

inline constexpr std::size_t kEnsembleBlock = 64;

// Runs fn(block_index, begin, end) over [0, n) split into blocks of
// block_size items.  fn must only touch state owned by its block slot.
inline void parallel_blocks(std::size_t n, std::size_t block_size,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn,
                            int workers = 0) {
  if (n == 0) return;
  if (block_size == 0) throw std::invalid_argument("parallel_blocks: block_size must be > 0");
  const std::size_t n_blocks = (n + block_size - 1) / block_size;
  const int w = std::min<std::size_t>(std::size_t(resolve_workers(workers)), n_blocks);

  auto run_block = [&](std::size_t b) {
    std::size_t begin = b * block_size;
    std::size_t end = std::min(n, begin + block_size);
    fn(b, begin, end);
  };

  if (w <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (int t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t b = next.fetch_add(1);
        if (b >= n_blocks || failed.load()) return;
        try {
          run_block(b);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!failed.exchange(true)) first_error = std::current_exception();
          return;
        }
      }
    });
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace qphase
