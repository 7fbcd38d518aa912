#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hashgraph/hash_graph.hpp"

namespace hashgraph {

/// Per-position multiplicities of a batch query plus instrumentation.
struct QueryResult {
  /// multiplicity[i]: occurrences of queries[i] in the table.
  std::vector<std::uint64_t> multiplicity;
  /// Sum of multiplicities over all query positions.
  std::uint64_t total_matches = 0;
  /// Element comparisons performed by the bucket intersections.
  std::uint64_t comparisons = 0;
  /// Number of bucket-pair intersections run (one per hash value).
  std::uint64_t intersections = 0;
  /// Time spent building the query-side table(s), including routing.
  std::uint64_t table_build_ns = 0;
  /// Time spent intersecting buckets.
  std::uint64_t intersect_ns = 0;

  std::uint64_t matched_positions() const;
  double comparisons_per_intersection() const {
    return intersections == 0 ? 0.0
                              : static_cast<double>(comparisons) /
                                    static_cast<double>(intersections);
  }
};

struct BucketIntersection {
  /// counts[j]: occurrences of b.entries[j] in a.
  std::vector<std::uint64_t> counts;
  std::uint64_t matches = 0;
  std::uint64_t comparisons = 0;
};

/// Nested-loop intersection of two buckets of the same hash value. Every
/// element of `b` scans all of `a`, so comparisons == |a| * |b|.
BucketIntersection intersect_buckets(const Bucket& a, const Bucket& b);

/// Builds a HashGraph over `queries` sharing the table's family and hash
/// range, then intersects corresponding buckets in parallel.
QueryResult intersect(const HashGraph& table, std::span<const std::uint32_t> queries,
                      unsigned workers = 1);

}  // namespace hashgraph
