#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hashgraph/hash_graph.hpp"
#include "hashgraph/query.hpp"

namespace hashgraph {

/// Build configuration for the partitioned multi-shard table.
struct ShardConfig {
  unsigned shards = 1;
  double load_factor = 1.0;
  /// Global bin count; 0 selects round(sqrt(HR)) clamped to >= shards.
  std::uint64_t bins_g = 0;
  HashFamily family{};
  /// Global hash range HR; 0 selects ceil(N_total / C).
  std::uint64_t hash_range = 0;
  /// Local workers inside each shard's table construction.
  unsigned workers_per_shard = 1;
};

/// Global hash range split into per-shard ownership intervals at bin
/// granularity. Shard d owns global hash values [boundary(d), boundary(d+1)).
struct PartitionPlan {
  unsigned shards = 1;
  std::uint64_t hash_range = 1;
  std::uint64_t bins_g = 1;
  std::uint64_t bin_size = 1;
  std::vector<std::uint64_t> bin_splits{0, 1};

  std::uint64_t bin_of(std::uint64_t global_hash) const { return global_hash / bin_size; }
  std::uint64_t boundary(unsigned d) const { return bin_splits[d] * bin_size; }

  /// Linear search over the shard boundaries. Adds the number of boundary
  /// comparisons made (1..P) to *steps when given.
  unsigned shard_of(std::uint64_t global_hash, std::uint64_t* steps = nullptr) const;

  friend bool operator==(const PartitionPlan&, const PartitionPlan&) = default;
};

/// HR = ceil(N / C) (at least 1) when cfg.hash_range is 0.
std::uint64_t resolve_hash_range(const ShardConfig& cfg, std::uint64_t total_keys);
/// round(sqrt(HR)) clamped to >= P when cfg.bins_g is 0.
std::uint64_t resolve_bins(const ShardConfig& cfg, std::uint64_t hash_range);

/// Split search over global bin counts. Shard boundary r is the first bin
/// index whose exclusive prefix reaches r * floor(N / P).
PartitionPlan plan_from_bin_counts(std::span<const std::uint64_t> bin_counts,
                                   std::uint64_t hash_range, unsigned shards);

/// Phase 1 as a standalone step: hash every shard's keys into HR, count per
/// bin, reduce across shards and search for the splits.
PartitionPlan plan_partition(std::span<const std::vector<std::uint32_t>> per_shard_inputs,
                             std::uint64_t hash_range, std::uint64_t bins_g, HashFamily family);

/// Keys of one shard grouped by destination shard, as a CSR with P rows.
struct SendBuffers {
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint32_t> keys;

  unsigned rows() const { return offsets.empty() ? 0 : static_cast<unsigned>(offsets.size() - 1); }
  std::span<const std::uint32_t> row(unsigned d) const {
    return std::span<const std::uint32_t>(keys).subspan(offsets[d], offsets[d + 1] - offsets[d]);
  }
};

/// Instrumentation for one build phase, summed across shards.
struct PhaseCounters {
  std::uint64_t keys_hashed = 0;
  std::uint64_t keys_counted = 0;
  std::uint64_t keys_placed = 0;
  std::uint64_t search_steps = 0;
  std::uint64_t bytes_exchanged = 0;

  std::uint64_t keys_touched() const { return keys_hashed + keys_counted + keys_placed; }
  PhaseCounters& operator+=(const PhaseCounters& o);
  friend bool operator==(const PhaseCounters&, const PhaseCounters&) = default;
};

/// Phase 2: count / prefix-sum / place of one shard's keys by destination.
SendBuffers reorganize(std::span<const std::uint32_t> shard_keys, const PartitionPlan& plan,
                       HashFamily family, PhaseCounters* counters = nullptr);

/// In-memory all-to-all. Each sender posts its buffers once; each receiver
/// then pulls row d from every sender in ascending sender order.
class ExchangeFabric {
 public:
  explicit ExchangeFabric(unsigned shards);

  unsigned shards() const { return shards_; }

  /// Only sender `s` may post into slot s; distinct senders may post concurrently.
  void post(unsigned sender, SendBuffers buffers);

  /// Concatenation of row `receiver` from every sender. Requires that all
  /// senders have posted. Distinct receivers may call concurrently.
  std::vector<std::uint32_t> receive(unsigned receiver);

  std::uint64_t keys_sent(unsigned from, unsigned to) const;
  std::uint64_t keys_received(unsigned at, unsigned from) const;
  std::uint64_t total_exchanged() const;
  /// True when every sent count matches its received count.
  bool conserved() const;

 private:
  unsigned shards_;
  std::vector<SendBuffers> outbox_;
  std::vector<std::uint64_t> sent_;      // [from * P + to]
  std::vector<std::uint64_t> received_;  // [at * P + from]
};

/// Phase 3 over a complete set of send buffers.
std::vector<std::vector<std::uint32_t>> exchange(std::vector<SendBuffers> send_buffers);

enum class Phase : std::size_t {
  Partition = 0,
  Preprocess = 1,
  AllToAll = 2,
  TableConstruction = 3,
};
inline constexpr std::size_t kPhaseCount = 4;
inline constexpr std::array<std::string_view, kPhaseCount> kPhaseNames = {
    "partition", "preprocess", "all_to_all", "table_construction"};

struct PhaseRecord {
  std::uint64_t wall_ns = 0;
  PhaseCounters counters;
};

/// Timing and instrumentation of one multi-shard build.
struct PhaseReport {
  std::array<PhaseRecord, kPhaseCount> phases{};
  std::uint64_t total_build_ns = 0;
  std::uint64_t total_keys = 0;
  unsigned shards = 0;
  /// Keys received (and stored) by each shard.
  std::vector<std::uint64_t> shard_keys;

  const PhaseRecord& operator[](Phase p) const { return phases[static_cast<std::size_t>(p)]; }
  PhaseRecord& operator[](Phase p) { return phases[static_cast<std::size_t>(p)]; }

  std::uint64_t phase_sum_ns() const;
  double build_keys_per_sec() const;
};

/// One HashGraph per shard plus the plan that routes keys to shards.
class ShardedHashGraph {
 public:
  ShardedHashGraph() = default;
  ShardedHashGraph(PartitionPlan plan, HashFamily family, double load_factor,
                   std::vector<HashGraph> shards);

  const PartitionPlan& plan() const { return plan_; }
  HashFamily family() const { return family_; }
  double load_factor() const { return load_factor_; }
  unsigned shard_count() const { return static_cast<unsigned>(shards_.size()); }
  const HashGraph& shard(unsigned d) const { return shards_.at(d); }
  const std::vector<HashGraph>& shards() const { return shards_; }
  std::uint64_t total_keys() const;

  std::uint64_t global_hash(std::uint32_t key) const {
    return hash_key(family_, key, HashRange{plan_.hash_range});
  }
  unsigned owner(std::uint32_t key) const { return plan_.shard_of(global_hash(key)); }

 private:
  PartitionPlan plan_;
  HashFamily family_{};
  double load_factor_ = 1.0;
  std::vector<HashGraph> shards_;
};

struct ShardedBuild {
  ShardedHashGraph table;
  PhaseReport report;
};

/// Four-phase build with one worker thread per shard: partition, reorganize,
/// all-to-all exchange, per-shard table construction. per_shard_inputs must
/// hold exactly cfg.shards arrays (sizes may differ).
ShardedBuild build_sharded(std::span<const std::vector<std::uint32_t>> per_shard_inputs,
                           const ShardConfig& cfg);

/// Contiguous, near-equal split of `keys` into `shards` arrays.
std::vector<std::vector<std::uint32_t>> split_evenly(std::span<const std::uint32_t> keys,
                                                     unsigned shards);

/// Routes queries through the table's plan, builds per-shard query tables
/// with each shard's local range and intersects shard-locally.
QueryResult query_sharded(const ShardedHashGraph& table, std::span<const std::uint32_t> queries,
                          unsigned workers = 1);

struct AuditVerdict {
  bool passed = true;
  std::vector<std::string> violations;
};

/// Work bounds of an instrumented build: destination-search steps <= N * P,
/// every other pass touches at most N keys.
AuditVerdict work_audit(const PhaseReport& report, std::uint64_t total_keys, unsigned shards);

}  // namespace hashgraph
