#include "hashgraph/hash_graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "hashgraph/errors.hpp"
#include "hashgraph/parallel.hpp"

namespace hashgraph {

HashRange range_for(std::uint64_t key_count, double load_factor) {
  if (!(load_factor > 0.0) || !std::isfinite(load_factor)) {
    throw ConfigError("load factor must be a positive finite number, got " +
                      std::to_string(load_factor));
  }
  const long double v = std::ceil(static_cast<long double>(key_count) / load_factor);
  if (v > static_cast<long double>(kMaxHashRange)) {
    throw ConfigError("hash range ceil(N / C) = " + std::to_string(static_cast<double>(v)) +
                      " exceeds the 32-bit hash width");
  }
  return HashRange{std::max<std::uint64_t>(1, static_cast<std::uint64_t>(v))};
}

namespace detail {

CsrArrays build_csr(std::span<const std::uint32_t> input, HashFamily family, HashRange range,
                    unsigned workers, bool with_positions, BuildStats* stats) {
  if (range.size == 0 || range.size > kMaxHashRange) {
    throw ConfigError("hash range must be in [1, 2^32], got " + std::to_string(range.size));
  }
  workers = std::max(1u, workers);
  const std::size_t n = input.size();
  const std::size_t v = range.size;
  std::vector<std::uint64_t> hashed_count(workers, 0);
  std::vector<std::uint64_t> counted(workers, 0);
  std::vector<std::uint64_t> placed(workers, 0);

  // Hash values fit in 32 bits because V <= 2^32.
  std::vector<std::uint32_t> hashed(n);
  parallel_for_chunks(workers, n, [&](unsigned w, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      hashed[i] = static_cast<std::uint32_t>(hash_key(family, input[i], range));
    }
    hashed_count[w] += e - b;
  });

  std::vector<std::uint64_t> counters(v, 0);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) ++counters[hashed[i]];
    counted[0] = n;
  } else {
    parallel_for_chunks(workers, n, [&](unsigned w, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        std::atomic_ref<std::uint64_t>(counters[hashed[i]]).fetch_add(1, std::memory_order_relaxed);
      }
      counted[w] += e - b;
    });
  }

  CsrArrays out;
  out.offsets.resize(v + 1);
  exclusive_prefix_sum(counters, out.offsets, workers);
  std::fill(counters.begin(), counters.end(), 0);

  out.keys.resize(n);
  if (with_positions) out.positions.resize(n);
  auto place = [&](std::size_t i, std::uint64_t pos) {
    const std::uint64_t slot = out.offsets[hashed[i]] + pos;
    out.keys[slot] = input[i];
    if (with_positions) out.positions[slot] = i;
  };
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) place(i, counters[hashed[i]]++);
    placed[0] = n;
  } else {
    parallel_for_chunks(workers, n, [&](unsigned w, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        place(i, std::atomic_ref<std::uint64_t>(counters[hashed[i]])
                     .fetch_add(1, std::memory_order_relaxed));
      }
      placed[w] += e - b;
    });
  }

  if (stats != nullptr) {
    for (unsigned w = 0; w < workers; ++w) {
      stats->keys_hashed += hashed_count[w];
      stats->keys_counted += counted[w];
      stats->keys_placed += placed[w];
    }
  }
  return out;
}

}  // namespace detail

HashGraph::HashGraph() : offsets_{0, 0}, range_{1}, family_{}, load_factor_(1.0) {}

HashGraph::HashGraph(std::vector<std::uint64_t> offsets, std::vector<std::uint32_t> keys,
                     HashRange range, HashFamily family, double load_factor)
    : offsets_(std::move(offsets)),
      keys_(std::move(keys)),
      range_(range),
      family_(family),
      load_factor_(load_factor) {}

HashGraph HashGraph::build(std::span<const std::uint32_t> keys, double load_factor,
                           HashFamily family, unsigned workers, BuildStats* stats) {
  const HashRange range = range_for(keys.size(), load_factor);
  auto csr = detail::build_csr(keys, family, range, workers, false, stats);
  return HashGraph(std::move(csr.offsets), std::move(csr.keys), range, family, load_factor);
}

HashGraph HashGraph::build_with_range(std::span<const std::uint32_t> keys, HashRange range,
                                      HashFamily family, unsigned workers, BuildStats* stats) {
  auto csr = detail::build_csr(keys, family, range, workers, false, stats);
  const double c = static_cast<double>(keys.size()) / static_cast<double>(range.size);
  return HashGraph(std::move(csr.offsets), std::move(csr.keys), range, family,
                   c > 0.0 ? c : 1.0);
}

HashGraph HashGraph::from_parts(std::vector<std::uint64_t> offsets,
                                std::vector<std::uint32_t> keys, HashRange range,
                                HashFamily family, double load_factor) {
  if (range.size == 0 || range.size > kMaxHashRange) {
    throw FormatError("hash range out of bounds: " + std::to_string(range.size));
  }
  if (!(load_factor > 0.0) || !std::isfinite(load_factor)) {
    throw FormatError("load factor must be positive and finite");
  }
  HashGraph g(std::move(offsets), std::move(keys), range, family, load_factor);
  g.validate();
  return g;
}

Bucket HashGraph::bucket(std::uint64_t h) const {
  if (h >= range_.size) {
    throw std::out_of_range("hash value " + std::to_string(h) + " outside range [0, " +
                            std::to_string(range_.size) + ")");
  }
  const auto begin = offsets_[h];
  const auto end = offsets_[h + 1];
  return Bucket{h, std::span<const std::uint32_t>(keys_).subspan(begin, end - begin)};
}

std::uint64_t HashGraph::contains(std::uint32_t key) const {
  const Bucket b = bucket(hash_of(key));
  return static_cast<std::uint64_t>(std::count(b.entries.begin(), b.entries.end(), key));
}

void HashGraph::validate() const {
  if (offsets_.size() != range_.size + 1) {
    throw FormatError("offset array has length " + std::to_string(offsets_.size()) +
                      ", expected V + 1 = " + std::to_string(range_.size + 1));
  }
  if (offsets_.front() != 0) throw FormatError("offset[0] must be 0");
  if (offsets_.back() != keys_.size()) {
    throw FormatError("offset[V] = " + std::to_string(offsets_.back()) +
                      " does not match key count " + std::to_string(keys_.size()));
  }
  for (std::uint64_t h = 0; h < range_.size; ++h) {
    if (offsets_[h + 1] < offsets_[h] || offsets_[h + 1] > keys_.size()) {
      throw FormatError("offset array is not monotone within [0, N] at hash value " +
                        std::to_string(h));
    }
    for (auto p = offsets_[h]; p < offsets_[h + 1]; ++p) {
      if (hash_of(keys_[p]) != h) {
        throw FormatError("key " + std::to_string(keys_[p]) + " stored in bucket " +
                          std::to_string(h) + " but hashes to " +
                          std::to_string(hash_of(keys_[p])));
      }
    }
  }
}

}  // namespace hashgraph
