#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "hashgraph/errors.hpp"
#include "hashgraph/multishard.hpp"
#include "hashgraph/workload.hpp"
#include "oracles.hpp"

using namespace hashgraph;
using hashgraph::oracle::sorted;

namespace {

constexpr HashFamily kIdentity{HashKind::Identity, 0};
constexpr HashFamily kMurmur{HashKind::Murmur32, 0x9e37u};

using Keys = std::vector<std::uint32_t>;
using Shards = std::vector<Keys>;

Keys concat(const Shards& shards) {
  Keys all;
  for (const auto& s : shards) all.insert(all.end(), s.begin(), s.end());
  return all;
}

ShardConfig config(unsigned p, HashFamily f, double c = 1.0, std::uint64_t hr = 0,
                   std::uint64_t bins = 0) {
  ShardConfig cfg;
  cfg.shards = p;
  cfg.family = f;
  cfg.load_factor = c;
  cfg.hash_range = hr;
  cfg.bins_g = bins;
  return cfg;
}

}  // namespace

TEST(PlanPartition, TwoShardHandExample) {
  const Shards inputs{{0, 1}, {2, 3}};
  const auto plan = plan_partition(inputs, 4, 4, kIdentity);
  EXPECT_EQ(plan.bin_size, 1u);
  EXPECT_EQ(plan.bin_splits, (std::vector<std::uint64_t>{0, 2, 4}));
  EXPECT_EQ(plan.shard_of(0), 0u);
  EXPECT_EQ(plan.shard_of(1), 0u);
  EXPECT_EQ(plan.shard_of(2), 1u);
  EXPECT_EQ(plan.shard_of(3), 1u);
}

TEST(PlanPartition, SingleShardOwnsEverything) {
  std::mt19937_64 rng(1);
  const Shards inputs{hashgraph::oracle::random_keys(rng, 5000, 0xffffffffu)};
  const auto plan = plan_partition(inputs, 5000, 71, kMurmur);
  EXPECT_EQ(plan.bin_splits, (std::vector<std::uint64_t>{0, 71}));
  for (std::uint64_t h = 0; h < 5000; h += 7) EXPECT_EQ(plan.shard_of(h), 0u);
}

TEST(PlanPartition, AllIdenticalKeysGoToOneShard) {
  const Shards inputs{Keys(1000, 5u), Keys(1000, 5u), Keys(1000, 5u), Keys(1000, 5u)};
  const auto plan = plan_partition(inputs, 4000, 63, kMurmur);
  EXPECT_TRUE(std::is_sorted(plan.bin_splits.begin(), plan.bin_splits.end()));
  EXPECT_EQ(plan.bin_splits.front(), 0u);
  EXPECT_EQ(plan.bin_splits.back(), 63u);
  const auto owner = plan.shard_of(hash_key(kMurmur, 5u, HashRange{4000}));
  std::vector<std::uint64_t> routed(4, 0);
  for (const auto& s : inputs) {
    for (const auto k : s) ++routed[plan.shard_of(hash_key(kMurmur, k, HashRange{4000}))];
  }
  EXPECT_EQ(routed[owner], 4000u);
}

TEST(PlanPartition, UniformKeysBalanceWithinFivePercent) {
  const auto keys = generate({WorkloadKind::RandomWithReplacement, 32, 1u << 20, 77, {}});
  const auto inputs = split_evenly(keys, 8);
  const std::uint64_t hr = 1u << 20;
  const auto plan = plan_partition(inputs, hr, 1024, kMurmur);
  std::vector<std::uint64_t> routed(8, 0);
  for (const auto k : keys) ++routed[plan.shard_of(hash_key(kMurmur, k, HashRange{hr}))];
  for (const auto r : routed) EXPECT_NEAR(static_cast<double>(r), keys.size() / 8.0, 0.05 * keys.size() / 8.0);
}

TEST(PlanPartition, RejectsBadParameters) {
  const Shards inputs{{1}, {2}, {3}};
  EXPECT_THROW(plan_partition(inputs, 8, 2, kMurmur), ConfigError);
  EXPECT_THROW(plan_partition(inputs, 0, 8, kMurmur), ConfigError);
  EXPECT_THROW(plan_partition(Shards{}, 8, 8, kMurmur), ConfigError);
}

TEST(PlanPartition, IndependentOfInputOrderAndPlacement) {
  std::mt19937_64 rng(4);
  auto keys = hashgraph::oracle::random_keys(rng, 40000, 3000);
  const auto base = plan_partition(split_evenly(keys, 4), 40000, 200, kMurmur);
  for (int round = 0; round < 5; ++round) {
    std::shuffle(keys.begin(), keys.end(), rng);
    // Uneven split: everything except a random prefix goes to the last shard.
    Shards uneven(4);
    const std::size_t cut = rng() % keys.size();
    uneven[0].assign(keys.begin(), keys.begin() + cut / 2);
    uneven[1].assign(keys.begin() + cut / 2, keys.begin() + cut);
    uneven[3].assign(keys.begin() + cut, keys.end());
    EXPECT_EQ(plan_partition(uneven, 40000, 200, kMurmur), base);
    EXPECT_EQ(plan_partition(split_evenly(keys, 4), 40000, 200, kMurmur), base);
  }
}

TEST(Reorganize, GroupsKeysByDestination) {
  const Shards inputs{{0, 1}, {2, 3}};
  const auto plan = plan_partition(inputs, 4, 4, kIdentity);
  PhaseCounters ctr;
  const auto buf = reorganize(Keys{0, 1, 2, 3}, plan, kIdentity, &ctr);
  ASSERT_EQ(buf.rows(), 2u);
  EXPECT_EQ(sorted(buf.row(0)), (Keys{0, 1}));
  EXPECT_EQ(sorted(buf.row(1)), (Keys{2, 3}));
  EXPECT_EQ(ctr.keys_counted, 4u);
  EXPECT_EQ(ctr.keys_placed, 4u);
  EXPECT_EQ(ctr.search_steps, 2u + 2u * 2u);
}

TEST(Reorganize, EmptyAndSingleDestination) {
  const Shards inputs{{0, 1}, {2, 3}};
  const auto plan = plan_partition(inputs, 4, 4, kIdentity);
  const auto empty = reorganize(Keys{}, plan, kIdentity);
  ASSERT_EQ(empty.rows(), 2u);
  EXPECT_TRUE(empty.row(0).empty());
  EXPECT_TRUE(empty.row(1).empty());
  const auto one = reorganize(Keys{3, 2, 3, 7}, plan, kIdentity);  // 7 % 4 = 3
  EXPECT_TRUE(one.row(0).empty());
  EXPECT_EQ(one.row(1).size(), 4u);
}

TEST(Exchange, ConcatenatesInSenderOrder) {
  auto make = [](Keys r0, Keys r1) {
    SendBuffers b;
    b.offsets = {0, r0.size(), r0.size() + r1.size()};
    b.keys = r0;
    b.keys.insert(b.keys.end(), r1.begin(), r1.end());
    return b;
  };
  const auto got = exchange({make({10}, {11}), make({20}, {21})});
  EXPECT_EQ(got[0], (Keys{10, 20}));
  EXPECT_EQ(got[1], (Keys{11, 21}));

  SendBuffers solo;
  solo.offsets = {0, 3};
  solo.keys = {5, 6, 7};
  EXPECT_EQ(exchange({solo})[0], (Keys{5, 6, 7}));
}

TEST(Exchange, RandomizedConservation) {
  std::mt19937_64 rng(6);
  constexpr unsigned kP = 8;
  const HashRange range{1u << 16};
  Shards inputs(kP);
  for (auto& in : inputs) in = hashgraph::oracle::random_keys(rng, 1000 + rng() % 5000, 0xffffffffu);
  const auto plan = plan_partition(inputs, range.size, 256, kMurmur);

  std::vector<SendBuffers> sends;
  for (const auto& in : inputs) sends.push_back(reorganize(in, plan, kMurmur));
  ExchangeFabric fabric(kP);
  for (unsigned s = 0; s < kP; ++s) fabric.post(s, sends[s]);
  std::uint64_t total = 0;
  for (unsigned d = 0; d < kP; ++d) {
    Keys expect;
    for (const auto& s : sends) expect.insert(expect.end(), s.row(d).begin(), s.row(d).end());
    const auto got = fabric.receive(d);
    EXPECT_EQ(got, expect);  // ascending sender, rows as sent
    total += got.size();
  }
  EXPECT_TRUE(fabric.conserved());
  EXPECT_EQ(fabric.total_exchanged(), total);
  EXPECT_EQ(total, concat(inputs).size());
}

TEST(Exchange, RejectsMalformedBuffers) {
  ExchangeFabric fabric(2);
  SendBuffers one_row;
  one_row.offsets = {0, 0};
  EXPECT_THROW(fabric.post(0, one_row), std::logic_error);
  EXPECT_THROW(fabric.receive(0), std::logic_error);  // nobody posted yet
}

TEST(BuildSharded, TwoShardHandExample) {
  const Shards inputs{{0, 1}, {2, 3}};
  const auto built = build_sharded(inputs, config(2, kIdentity, 1.0, 4, 4));
  const auto& t = built.table;
  ASSERT_EQ(t.shard_count(), 2u);
  EXPECT_EQ(sorted(t.shard(0).keys()), (Keys{0, 1}));
  EXPECT_EQ(sorted(t.shard(1).keys()), (Keys{2, 3}));
  for (const auto& s : t.shards()) EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(built.report.shard_keys, (std::vector<std::uint64_t>{2, 2}));
}

TEST(BuildSharded, SingleShardReducesToSingleBuild) {
  std::mt19937_64 rng(2);
  for (int round = 0; round < 5; ++round) {
    const Shards inputs{hashgraph::oracle::random_keys(rng, 1000 + rng() % 20000, 5000)};
    for (const auto f : {kIdentity, kMurmur}) {
      const auto sharded = build_sharded(inputs, config(1, f, 1.5));
      const auto single = HashGraph::build(inputs[0], 1.5, f);
      const auto& s = sharded.table.shard(0);
      ASSERT_TRUE(std::equal(s.offsets().begin(), s.offsets().end(), single.offsets().begin(),
                             single.offsets().end()));
      for (std::uint64_t h = 0; h < single.hash_range(); ++h) {
        ASSERT_EQ(hashgraph::oracle::sorted_bucket(s, h),
                  hashgraph::oracle::sorted_bucket(single, h));
      }
    }
  }
}

TEST(BuildSharded, ConservationOwnershipAndQueries) {
  std::mt19937_64 rng(31);
  for (const unsigned p : {1u, 2u, 4u, 8u, 16u}) {
    Shards inputs(p);
    for (auto& in : inputs) in = hashgraph::oracle::random_keys(rng, rng() % 40000, 1u << 18);
    const auto all = concat(inputs);
    const auto built = build_sharded(inputs, config(p, kMurmur));
    const auto& t = built.table;
    EXPECT_EQ(t.total_keys(), all.size());
    EXPECT_EQ(sorted(concat([&] {
                Shards s;
                for (const auto& g : t.shards()) s.emplace_back(g.keys().begin(), g.keys().end());
                return s;
              }())),
              sorted(all));
    const HashRange global{t.plan().hash_range};
    for (unsigned d = 0; d < p; ++d) {
      ASSERT_EQ(hashgraph::oracle::csr_violation(t.shard(d), t.shard(d).keys()), "");
      for (const auto k : t.shard(d).keys()) {
        const auto g = hash_key(kMurmur, k, global);
        ASSERT_GE(g, t.plan().boundary(d));
        ASSERT_LT(g, t.plan().boundary(d + 1));
      }
    }
    const auto queries = hashgraph::oracle::random_keys(rng, 30000, 1u << 18);
    EXPECT_EQ(query_sharded(t, queries, 2).multiplicity,
              hashgraph::oracle::brute_force_multiplicities(all, queries));
  }
}

TEST(BuildSharded, LargeEndToEnd) {
  const auto keys = generate({WorkloadKind::RandomWithReplacement, 22, 1u << 22, 123, {}});
  const auto built = build_sharded(split_evenly(keys, 16), config(16, kMurmur));
  const auto queries = generate({WorkloadKind::RandomWithReplacement, 22, 1u << 20, 124, {}});
  EXPECT_EQ(query_sharded(built.table, queries).multiplicity,
            hashgraph::oracle::brute_force_multiplicities(keys, queries));
  EXPECT_EQ(built.table.total_keys(), keys.size());
}

TEST(BuildSharded, BalancesUniformKeys) {
  const auto keys = generate({WorkloadKind::RandomWithReplacement, 32, 1u << 20, 5, {}});
  const auto built = build_sharded(split_evenly(keys, 8), config(8, kMurmur));
  EXPECT_EQ(built.table.plan().bins_g, 1024u);
  for (const auto n : built.report.shard_keys) {
    EXPECT_NEAR(static_cast<double>(n), keys.size() / 8.0, 0.05 * keys.size() / 8.0);
  }
}

TEST(BuildSharded, ReportCountersAndPhaseAccounting) {
  const auto keys = generate({WorkloadKind::RandomWithReplacement, 20, 200000, 8, {}});
  const auto built = build_sharded(split_evenly(keys, 4), config(4, kMurmur));
  const auto& r = built.report;
  const std::uint64_t n = keys.size();
  EXPECT_EQ(r[Phase::Partition].counters.keys_hashed, n);
  EXPECT_EQ(r[Phase::Partition].counters.keys_counted, n);
  EXPECT_EQ(r[Phase::Preprocess].counters.keys_placed, n);
  EXPECT_LE(r[Phase::Preprocess].counters.search_steps, n * 4);
  EXPECT_GE(r[Phase::Preprocess].counters.search_steps, n);
  EXPECT_EQ(r[Phase::AllToAll].counters.bytes_exchanged, 4 * n);
  EXPECT_EQ(r[Phase::TableConstruction].counters.keys_touched(), 3 * n);
  EXPECT_LE(r.phase_sum_ns(), r.total_build_ns);
  EXPECT_GT(r.build_keys_per_sec(), 0.0);

  const auto again = build_sharded(split_evenly(keys, 4), config(4, kMurmur));
  for (std::size_t i = 0; i < kPhaseCount; ++i) {
    EXPECT_EQ(again.report.phases[i].counters, r.phases[i].counters);
  }
}

TEST(BuildSharded, RejectsBadConfig) {
  const Shards two{{1}, {2}};
  EXPECT_THROW(build_sharded(two, config(3, kMurmur)), ConfigError);
  EXPECT_THROW(build_sharded(two, config(2, kMurmur, 0.0)), ConfigError);
  EXPECT_THROW(build_sharded(two, config(2, kMurmur, 1.0, 0, 1)), ConfigError);
  EXPECT_THROW(build_sharded(two, config(0, kMurmur)), ConfigError);
}

TEST(BuildSharded, TinyInputsWithManyShards) {
  const Shards inputs{{}, {7}, {}, {7, 7}};
  const auto built = build_sharded(inputs, config(4, kMurmur));
  EXPECT_EQ(built.table.total_keys(), 3u);
  EXPECT_EQ(query_sharded(built.table, Keys{7, 8}).multiplicity,
            (std::vector<std::uint64_t>{3, 0}));
  const Shards empty(3);
  const auto none = build_sharded(empty, config(3, kIdentity));
  EXPECT_EQ(none.table.total_keys(), 0u);
  EXPECT_EQ(query_sharded(none.table, Keys{1}).multiplicity, (std::vector<std::uint64_t>{0}));
}

TEST(QueryShared, HandExampleAndEdges) {
  const Shards inputs{{0, 1}, {2, 3}};
  const auto built = build_sharded(inputs, config(2, kIdentity, 1.0, 4, 4));
  EXPECT_EQ(query_sharded(built.table, Keys{3, 9}).multiplicity,
            (std::vector<std::uint64_t>{1, 0}));
  EXPECT_TRUE(query_sharded(built.table, Keys{}).multiplicity.empty());
  const auto copy = query_sharded(built.table, Keys{0, 1, 2, 3});
  EXPECT_EQ(copy.multiplicity, (std::vector<std::uint64_t>{1, 1, 1, 1}));
}

TEST(WorkAudit, SingleShardSearchStepsEqualN) {
  const auto keys = generate({WorkloadKind::Sequential, 16, 50000, 0, {}});
  const auto built = build_sharded(split_evenly(keys, 1), config(1, kMurmur));
  EXPECT_EQ(built.report[Phase::Preprocess].counters.search_steps, keys.size());
  EXPECT_TRUE(work_audit(built.report, keys.size(), 1).passed);
}

TEST(WorkAudit, SearchStepsBoundedAndScaleAtMostLinearlyInP) {
  const auto keys = generate({WorkloadKind::RandomWithReplacement, 32, 1u << 20, 3, {}});
  std::uint64_t prev = 0;
  for (const unsigned p : {4u, 8u}) {
    const auto built = build_sharded(split_evenly(keys, p), config(p, kMurmur));
    const auto steps = built.report[Phase::Preprocess].counters.search_steps;
    EXPECT_LE(steps, std::uint64_t{p} << 20);
    const auto verdict = work_audit(built.report, keys.size(), p);
    EXPECT_TRUE(verdict.passed);
    EXPECT_TRUE(verdict.violations.empty());
    if (prev != 0) EXPECT_LE(static_cast<double>(steps) / prev, 2.0);
    prev = steps;
  }
}

TEST(WorkAudit, FlagsViolations) {
  PhaseReport report;
  report[Phase::Preprocess].counters.search_steps = 101;
  report[Phase::TableConstruction].counters.keys_placed = 11;
  const auto verdict = work_audit(report, 10, 10);
  EXPECT_FALSE(verdict.passed);
  EXPECT_EQ(verdict.violations.size(), 2u);
}

TEST(SplitEvenly, DistributesRemainder) {
  const auto parts = split_evenly(Keys{1, 2, 3, 4, 5}, 3);
  EXPECT_EQ(parts[0], (Keys{1, 2}));
  EXPECT_EQ(parts[1], (Keys{3, 4}));
  EXPECT_EQ(parts[2], (Keys{5}));
}
