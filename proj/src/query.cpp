#include "hashgraph/query.hpp"

#include <algorithm>
#include <chrono>

#include "hashgraph/parallel.hpp"

namespace hashgraph {
namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point since) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count());
}

// No early exit: the full bucket is scanned for every probe.
inline std::uint64_t count_occurrences(std::span<const std::uint32_t> haystack,
                                       std::uint32_t key) {
  std::uint64_t c = 0;
  for (const std::uint32_t k : haystack) c += (k == key);
  return c;
}

}  // namespace

std::uint64_t QueryResult::matched_positions() const {
  return static_cast<std::uint64_t>(
      std::count_if(multiplicity.begin(), multiplicity.end(), [](auto m) { return m > 0; }));
}

BucketIntersection intersect_buckets(const Bucket& a, const Bucket& b) {
  BucketIntersection out;
  out.counts.reserve(b.size());
  for (const std::uint32_t key : b.entries) {
    const std::uint64_t c = count_occurrences(a.entries, key);
    out.counts.push_back(c);
    out.matches += c;
  }
  out.comparisons = static_cast<std::uint64_t>(a.size()) * b.size();
  return out;
}

QueryResult intersect(const HashGraph& table, std::span<const std::uint32_t> queries,
                      unsigned workers) {
  workers = std::max(1u, workers);
  QueryResult result;
  result.multiplicity.assign(queries.size(), 0);

  auto t0 = Clock::now();
  const auto query_csr =
      detail::build_csr(queries, table.family(), table.range(), workers, true, nullptr);
  result.table_build_ns = elapsed_ns(t0);

  t0 = Clock::now();
  const auto table_offsets = table.offsets();
  const auto table_keys = table.keys();
  const std::uint64_t v = table.hash_range();
  std::vector<std::uint64_t> matches(workers, 0);
  std::vector<std::uint64_t> comparisons(workers, 0);
  // Each hash value is owned by one worker; query positions are unique, so
  // writes into multiplicity never collide.
  parallel_for_chunks(workers, v, [&](unsigned w, std::size_t hb, std::size_t he) {
    for (std::size_t h = hb; h < he; ++h) {
      const auto a = table_keys.subspan(table_offsets[h], table_offsets[h + 1] - table_offsets[h]);
      const auto qb = query_csr.offsets[h];
      const auto qe = query_csr.offsets[h + 1];
      for (auto p = qb; p < qe; ++p) {
        const std::uint64_t c = count_occurrences(a, query_csr.keys[p]);
        result.multiplicity[query_csr.positions[p]] = c;
        matches[w] += c;
      }
      comparisons[w] += a.size() * (qe - qb);
    }
  });
  for (unsigned w = 0; w < workers; ++w) {
    result.total_matches += matches[w];
    result.comparisons += comparisons[w];
  }
  result.intersections = v;
  result.intersect_ns = elapsed_ns(t0);
  return result;
}

}  // namespace hashgraph
