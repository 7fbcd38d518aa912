#pragma once

// Test-only reference computations. Nothing here calls into the CSR build,
// query or partition code paths it is used to check.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hashgraph/hash_graph.hpp"
#include "hashgraph/hashing.hpp"

namespace hashgraph::oracle {

// Reference fmix32 written independently of hashing.hpp.
inline std::uint32_t reference_fmix32(std::uint32_t h) {
  std::uint64_t x = h;
  x ^= x >> 16;
  x = (x * 0x85ebca6bULL) & 0xffffffffULL;
  x ^= x >> 13;
  x = (x * 0xc2b2ae35ULL) & 0xffffffffULL;
  x ^= x >> 16;
  return static_cast<std::uint32_t>(x);
}

inline std::uint64_t reference_hash(HashFamily f, std::uint32_t key, std::uint64_t v) {
  const std::uint32_t raw = f.kind == HashKind::Identity ? key : reference_fmix32(key ^ f.seed);
  return raw % v;
}

// Occurrence count of every distinct key.
inline std::unordered_map<std::uint32_t, std::uint64_t> count_keys(
    std::span<const std::uint32_t> keys) {
  std::unordered_map<std::uint32_t, std::uint64_t> counts;
  counts.reserve(keys.size());
  for (const auto k : keys) ++counts[k];
  return counts;
}

// Brute-force multiplicity of each query position.
inline std::vector<std::uint64_t> brute_force_multiplicities(
    std::span<const std::uint32_t> table_keys, std::span<const std::uint32_t> queries) {
  const auto counts = count_keys(table_keys);
  std::vector<std::uint64_t> out(queries.size(), 0);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto it = counts.find(queries[i]);
    out[i] = it == counts.end() ? 0 : it->second;
  }
  return out;
}

// Map from hash value to the sorted keys with that hash.
inline std::map<std::uint64_t, std::vector<std::uint32_t>> group_by_hash(
    std::span<const std::uint32_t> keys, HashFamily f, std::uint64_t v) {
  std::map<std::uint64_t, std::vector<std::uint32_t>> groups;
  for (const auto k : keys) groups[reference_hash(f, k, v)].push_back(k);
  for (auto& [h, g] : groups) std::sort(g.begin(), g.end());
  return groups;
}

inline std::vector<std::uint32_t> sorted(std::span<const std::uint32_t> keys) {
  std::vector<std::uint32_t> s(keys.begin(), keys.end());
  std::sort(s.begin(), s.end());
  return s;
}

inline std::vector<std::uint32_t> sorted_bucket(const HashGraph& g, std::uint64_t h) {
  return sorted(g.bucket(h).entries);
}

// Checks every CSR invariant of `g` against `input` without trusting
// HashGraph::validate. Returns an empty string when all hold.
inline std::string csr_violation(const HashGraph& g, std::span<const std::uint32_t> input) {
  const auto off = g.offsets();
  const auto v = g.hash_range();
  if (off.size() != v + 1) return "offset length != V + 1";
  if (off[0] != 0) return "offset[0] != 0";
  if (off[v] != input.size()) return "offset[V] != N";
  for (std::uint64_t h = 0; h < v; ++h) {
    if (off[h + 1] < off[h]) return "offset not monotone at " + std::to_string(h);
  }
  const auto groups = group_by_hash(input, g.family(), v);
  for (std::uint64_t h = 0; h < v; ++h) {
    const auto it = groups.find(h);
    const std::size_t expect = it == groups.end() ? 0 : it->second.size();
    if (off[h + 1] - off[h] != expect) return "degree mismatch at " + std::to_string(h);
    for (auto p = off[h]; p < off[h + 1]; ++p) {
      if (reference_hash(g.family(), g.keys()[p], v) != h) {
        return "key in wrong bucket at " + std::to_string(h);
      }
    }
    if (expect != 0 && sorted_bucket(g, h) != it->second) {
      return "bucket multiset mismatch at " + std::to_string(h);
    }
  }
  return {};
}

inline std::vector<std::uint32_t> random_keys(std::mt19937_64& rng, std::size_t n,
                                              std::uint32_t max_key) {
  std::uniform_int_distribution<std::uint32_t> dist(0, max_key);
  std::vector<std::uint32_t> out(n);
  for (auto& k : out) k = dist(rng);
  return out;
}

}  // namespace hashgraph::oracle
