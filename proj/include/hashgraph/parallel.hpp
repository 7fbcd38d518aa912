#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

namespace hashgraph {

// Splits [0, n) into `workers` contiguous chunks and runs
// fn(worker, begin, end) for each, one thread per chunk. Chunk 0 runs on the
// calling thread. Exceptions from any chunk are rethrown after all join.
template <typename Fn>
void parallel_for_chunks(unsigned workers, std::size_t n, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n < 2) {
    fn(0u, std::size_t{0}, n);
    for (unsigned w = 1; w < workers; ++w) fn(w, n, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) {
      threads.emplace_back([&, w] {
        const std::size_t begin = std::min(n, w * chunk);
        const std::size_t end = std::min(n, begin + chunk);
        try {
          fn(w, begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    try {
      fn(0u, std::size_t{0}, std::min(n, chunk));
    } catch (...) {
      errors[0] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Exclusive prefix sum of `counts` into `offsets` (size counts.size() + 1).
// Returns the grand total, which is also written to offsets.back().
inline std::uint64_t exclusive_prefix_sum(std::span<const std::uint64_t> counts,
                                          std::span<std::uint64_t> offsets,
                                          unsigned workers = 1) {
  const std::size_t n = counts.size();
  if (workers <= 1 || n < (std::size_t{1} << 16)) {
    offsets[0] = 0;
    std::inclusive_scan(counts.begin(), counts.end(), offsets.begin() + 1);
    return offsets[n];
  }
  // Two-level scan: per-chunk totals, scan of totals, then per-chunk fill.
  std::vector<std::uint64_t> partial(workers + 1, 0);
  parallel_for_chunks(workers, n, [&](unsigned w, std::size_t b, std::size_t e) {
    std::uint64_t s = 0;
    for (std::size_t i = b; i < e; ++i) s += counts[i];
    partial[w + 1] = s;
  });
  std::inclusive_scan(partial.begin(), partial.end(), partial.begin());
  offsets[0] = 0;
  parallel_for_chunks(workers, n, [&](unsigned w, std::size_t b, std::size_t e) {
    std::uint64_t running = partial[w];
    for (std::size_t i = b; i < e; ++i) {
      running += counts[i];
      offsets[i + 1] = running;
    }
  });
  return offsets[n];
}

}  // namespace hashgraph
