#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hashgraph/hashing.hpp"

namespace hashgraph {

/// Per-pass key-touch counters of one build.
struct BuildStats {
  std::uint64_t keys_hashed = 0;
  std::uint64_t keys_counted = 0;
  std::uint64_t keys_placed = 0;

  std::uint64_t keys_touched() const { return keys_hashed + keys_counted + keys_placed; }
};

/// Keys sharing one hash value: keys[offset[h] .. offset[h+1]).
struct Bucket {
  std::uint64_t hash_value = 0;
  std::span<const std::uint32_t> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

/// V for N keys at load factor C: max(1, ceil(N / C)). Throws ConfigError on
/// C <= 0 (or non-finite) and when V would exceed kMaxHashRange.
HashRange range_for(std::uint64_t key_count, double load_factor);

/// A static hash table stored as a CSR bipartite graph between hash values
/// and keys. Row h of the CSR holds every key whose hash value is h; the
/// order of keys within a row is unspecified.
///
/// Immutable after construction and safe to read from many threads.
class HashGraph {
 public:
  HashGraph();

  /// Count / prefix-sum / place build with V = max(1, ceil(N / C)).
  static HashGraph build(std::span<const std::uint32_t> keys, double load_factor,
                         HashFamily family, unsigned workers = 1,
                         BuildStats* stats = nullptr);

  /// Same build with an explicit hash range. The recorded load factor is N / V.
  static HashGraph build_with_range(std::span<const std::uint32_t> keys, HashRange range,
                                    HashFamily family, unsigned workers = 1,
                                    BuildStats* stats = nullptr);

  /// Adopts raw CSR arrays (e.g. from a snapshot) after checking every
  /// structural invariant. Throws FormatError on violation.
  static HashGraph from_parts(std::vector<std::uint64_t> offsets,
                              std::vector<std::uint32_t> keys, HashRange range,
                              HashFamily family, double load_factor);

  HashRange range() const { return range_; }
  std::uint64_t hash_range() const { return range_.size; }
  HashFamily family() const { return family_; }
  double load_factor() const { return load_factor_; }
  std::uint64_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }

  std::span<const std::uint64_t> offsets() const { return offsets_; }
  std::span<const std::uint32_t> keys() const { return keys_; }

  std::uint64_t hash_of(std::uint32_t key) const { return hash_key(family_, key, range_); }

  /// Throws std::out_of_range when h >= V.
  Bucket bucket(std::uint64_t h) const;

  /// Number of occurrences of `key`; 0 when absent.
  std::uint64_t contains(std::uint32_t key) const;

  /// Throws FormatError if any CSR invariant is violated: offset length V+1,
  /// offset[0] = 0, monotone, offset[V] = N, every key in the row of its hash.
  void validate() const;

 private:
  HashGraph(std::vector<std::uint64_t> offsets, std::vector<std::uint32_t> keys,
            HashRange range, HashFamily family, double load_factor);

  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint32_t> keys_;
  HashRange range_;
  HashFamily family_;
  double load_factor_ = 1.0;
};

namespace detail {

/// Raw output of the CSR build. `positions`, when requested, holds the input
/// index of each placed key (keys[p] == input[positions[p]]).
struct CsrArrays {
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint32_t> keys;
  std::vector<std::uint64_t> positions;
};

CsrArrays build_csr(std::span<const std::uint32_t> input, HashFamily family, HashRange range,
                    unsigned workers, bool with_positions, BuildStats* stats);

}  // namespace detail

}  // namespace hashgraph
