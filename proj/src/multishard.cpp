#include "hashgraph/multishard.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <exception>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>

#include "hashgraph/errors.hpp"
#include "hashgraph/parallel.hpp"

namespace hashgraph {
namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t ns_between(Clock::time_point a, Clock::time_point b) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count());
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return a / b + (a % b != 0); }

void check_hash_range(std::uint64_t hash_range) {
  if (hash_range == 0) throw ConfigError("global hash range must be >= 1");
  if (hash_range > kMaxHashRange) {
    throw ConfigError("global hash range " + std::to_string(hash_range) +
                      " exceeds the 32-bit hash width");
  }
}

// Phase 2 body over precomputed global hashes.
SendBuffers reorganize_hashed(std::span<const std::uint32_t> keys,
                              std::span<const std::uint32_t> hashed, const PartitionPlan& plan,
                              PhaseCounters& counters) {
  const unsigned p = plan.shards;
  const std::size_t n = keys.size();
  std::vector<std::uint32_t> dest(n);
  std::vector<std::uint64_t> counts(p, 0);
  std::uint64_t steps = 0;
  for (std::size_t i = 0; i < n; ++i) {
    dest[i] = plan.shard_of(hashed[i], &steps);
    ++counts[dest[i]];
  }
  SendBuffers out;
  out.offsets.resize(p + 1);
  exclusive_prefix_sum(counts, out.offsets);
  std::fill(counts.begin(), counts.end(), 0);
  out.keys.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.keys[out.offsets[dest[i]] + counts[dest[i]]++] = keys[i];
  }
  counters.keys_counted += n;
  counters.keys_placed += n;
  counters.search_steps += steps;
  return out;
}

}  // namespace

unsigned PartitionPlan::shard_of(std::uint64_t global_hash, std::uint64_t* steps) const {
  for (unsigned d = 0; d < shards; ++d) {
    if (steps != nullptr) ++*steps;
    if (global_hash < boundary(d + 1)) return d;
  }
  // boundary(P) = BINS_G * bin_size >= HR, so only out-of-range input lands here.
  return shards - 1;
}

std::uint64_t resolve_hash_range(const ShardConfig& cfg, std::uint64_t total_keys) {
  if (cfg.hash_range != 0) return cfg.hash_range;
  return range_for(total_keys, cfg.load_factor).size;
}

std::uint64_t resolve_bins(const ShardConfig& cfg, std::uint64_t hash_range) {
  if (cfg.bins_g != 0) return cfg.bins_g;
  const auto root = static_cast<std::uint64_t>(std::llround(std::sqrt(static_cast<double>(hash_range))));
  return std::max<std::uint64_t>({root, cfg.shards, 1});
}

PartitionPlan plan_from_bin_counts(std::span<const std::uint64_t> bin_counts,
                                   std::uint64_t hash_range, unsigned shards) {
  if (shards == 0) throw ConfigError("shard count must be >= 1");
  check_hash_range(hash_range);
  if (bin_counts.size() < shards) {
    throw ConfigError("BINS_G (" + std::to_string(bin_counts.size()) +
                      ") must be >= shard count (" + std::to_string(shards) + ")");
  }
  PartitionPlan plan;
  plan.shards = shards;
  plan.hash_range = hash_range;
  plan.bins_g = bin_counts.size();
  plan.bin_size = ceil_div(hash_range, plan.bins_g);

  std::vector<std::uint64_t> bin_offset(plan.bins_g + 1);
  const std::uint64_t total = exclusive_prefix_sum(bin_counts, bin_offset);
  const std::uint64_t per_shard = total / shards;

  plan.bin_splits.assign(shards + 1, 0);
  for (unsigned r = 1; r < shards; ++r) {
    const std::uint64_t target = per_shard * r;
    plan.bin_splits[r] = static_cast<std::uint64_t>(
        std::lower_bound(bin_offset.begin(), bin_offset.end(), target) - bin_offset.begin());
  }
  plan.bin_splits[shards] = plan.bins_g;
  return plan;
}

PartitionPlan plan_partition(std::span<const std::vector<std::uint32_t>> per_shard_inputs,
                             std::uint64_t hash_range, std::uint64_t bins_g, HashFamily family) {
  const auto shards = static_cast<unsigned>(per_shard_inputs.size());
  if (shards == 0) throw ConfigError("at least one shard input is required");
  check_hash_range(hash_range);
  if (bins_g < shards) {
    throw ConfigError("BINS_G (" + std::to_string(bins_g) + ") must be >= shard count (" +
                      std::to_string(shards) + ")");
  }
  const std::uint64_t bin_size = ceil_div(hash_range, bins_g);
  const HashRange range{hash_range};
  std::vector<std::uint64_t> global(bins_g, 0);
  for (const auto& keys : per_shard_inputs) {
    std::vector<std::uint64_t> local(bins_g, 0);
    for (const std::uint32_t k : keys) ++local[hash_key(family, k, range) / bin_size];
    for (std::uint64_t b = 0; b < bins_g; ++b) global[b] += local[b];
  }
  return plan_from_bin_counts(global, hash_range, shards);
}

PhaseCounters& PhaseCounters::operator+=(const PhaseCounters& o) {
  keys_hashed += o.keys_hashed;
  keys_counted += o.keys_counted;
  keys_placed += o.keys_placed;
  search_steps += o.search_steps;
  bytes_exchanged += o.bytes_exchanged;
  return *this;
}

SendBuffers reorganize(std::span<const std::uint32_t> shard_keys, const PartitionPlan& plan,
                       HashFamily family, PhaseCounters* counters) {
  std::vector<std::uint32_t> hashed(shard_keys.size());
  const HashRange range{plan.hash_range};
  for (std::size_t i = 0; i < shard_keys.size(); ++i) {
    hashed[i] = static_cast<std::uint32_t>(hash_key(family, shard_keys[i], range));
  }
  PhaseCounters local;
  local.keys_hashed = shard_keys.size();
  auto out = reorganize_hashed(shard_keys, hashed, plan, local);
  if (counters != nullptr) *counters += local;
  return out;
}

ExchangeFabric::ExchangeFabric(unsigned shards)
    : shards_(shards),
      outbox_(shards),
      sent_(std::size_t{shards} * shards, 0),
      received_(std::size_t{shards} * shards, 0) {
  if (shards == 0) throw ConfigError("exchange fabric needs at least one shard");
}

void ExchangeFabric::post(unsigned sender, SendBuffers buffers) {
  if (sender >= shards_) throw std::logic_error("exchange: sender id out of range");
  if (buffers.rows() != shards_) {
    throw std::logic_error("exchange: send buffer has " + std::to_string(buffers.rows()) +
                           " rows, expected " + std::to_string(shards_));
  }
  for (unsigned d = 0; d < shards_; ++d) {
    sent_[std::size_t{sender} * shards_ + d] = buffers.row(d).size();
  }
  outbox_[sender] = std::move(buffers);
}

std::vector<std::uint32_t> ExchangeFabric::receive(unsigned receiver) {
  if (receiver >= shards_) throw std::logic_error("exchange: receiver id out of range");
  std::uint64_t total = 0;
  for (unsigned s = 0; s < shards_; ++s) {
    if (outbox_[s].rows() != shards_) {
      throw std::logic_error("exchange: sender " + std::to_string(s) + " has not posted");
    }
    total += outbox_[s].row(receiver).size();
  }
  std::vector<std::uint32_t> out;
  out.reserve(total);
  for (unsigned s = 0; s < shards_; ++s) {
    const auto row = outbox_[s].row(receiver);
    out.insert(out.end(), row.begin(), row.end());
    received_[std::size_t{receiver} * shards_ + s] = row.size();
  }
  return out;
}

std::uint64_t ExchangeFabric::keys_sent(unsigned from, unsigned to) const {
  return sent_.at(std::size_t{from} * shards_ + to);
}

std::uint64_t ExchangeFabric::keys_received(unsigned at, unsigned from) const {
  return received_.at(std::size_t{at} * shards_ + from);
}

std::uint64_t ExchangeFabric::total_exchanged() const {
  std::uint64_t total = 0;
  for (const auto r : received_) total += r;
  return total;
}

bool ExchangeFabric::conserved() const {
  for (unsigned s = 0; s < shards_; ++s) {
    for (unsigned d = 0; d < shards_; ++d) {
      if (keys_sent(s, d) != keys_received(d, s)) return false;
    }
  }
  return true;
}

std::vector<std::vector<std::uint32_t>> exchange(std::vector<SendBuffers> send_buffers) {
  const auto p = static_cast<unsigned>(send_buffers.size());
  ExchangeFabric fabric(p);
  for (unsigned s = 0; s < p; ++s) fabric.post(s, std::move(send_buffers[s]));
  std::vector<std::vector<std::uint32_t>> out(p);
  for (unsigned d = 0; d < p; ++d) out[d] = fabric.receive(d);
  if (!fabric.conserved()) throw std::logic_error("exchange: sent and received counts differ");
  return out;
}

std::uint64_t PhaseReport::phase_sum_ns() const {
  std::uint64_t s = 0;
  for (const auto& p : phases) s += p.wall_ns;
  return s;
}

double PhaseReport::build_keys_per_sec() const {
  if (total_build_ns == 0) return 0.0;
  return static_cast<double>(total_keys) * 1e9 / static_cast<double>(total_build_ns);
}

ShardedHashGraph::ShardedHashGraph(PartitionPlan plan, HashFamily family, double load_factor,
                                   std::vector<HashGraph> shards)
    : plan_(std::move(plan)),
      family_(family),
      load_factor_(load_factor),
      shards_(std::move(shards)) {
  if (shards_.size() != plan_.shards) {
    throw ConfigError("plan has " + std::to_string(plan_.shards) + " shards but " +
                      std::to_string(shards_.size()) + " tables were given");
  }
}

std::uint64_t ShardedHashGraph::total_keys() const {
  std::uint64_t n = 0;
  for (const auto& s : shards_) n += s.size();
  return n;
}

std::vector<std::vector<std::uint32_t>> split_evenly(std::span<const std::uint32_t> keys,
                                                     unsigned shards) {
  if (shards == 0) throw ConfigError("shard count must be >= 1");
  std::vector<std::vector<std::uint32_t>> out(shards);
  const std::size_t base = keys.size() / shards;
  const std::size_t extra = keys.size() % shards;
  std::size_t at = 0;
  for (unsigned d = 0; d < shards; ++d) {
    const std::size_t len = base + (d < extra ? 1 : 0);
    out[d].assign(keys.begin() + at, keys.begin() + at + len);
    at += len;
  }
  return out;
}

ShardedBuild build_sharded(std::span<const std::vector<std::uint32_t>> per_shard_inputs,
                           const ShardConfig& cfg) {
  const auto build_start = Clock::now();
  const unsigned p = cfg.shards;
  if (p == 0) throw ConfigError("shard count must be >= 1");
  if (per_shard_inputs.size() != p) {
    throw ConfigError("expected " + std::to_string(p) + " shard inputs, got " +
                      std::to_string(per_shard_inputs.size()));
  }
  range_for(0, cfg.load_factor);  // validates C

  std::uint64_t total_keys = 0;
  for (const auto& in : per_shard_inputs) total_keys += in.size();
  const std::uint64_t hash_range = resolve_hash_range(cfg, total_keys);
  check_hash_range(hash_range);
  const std::uint64_t bins_g = resolve_bins(cfg, hash_range);
  if (bins_g < p) {
    throw ConfigError("BINS_G (" + std::to_string(bins_g) + ") must be >= shard count (" +
                      std::to_string(p) + ")");
  }
  if (bins_g > kMaxHashRange) throw ConfigError("BINS_G exceeds 2^32");
  const std::uint64_t bin_size = ceil_div(hash_range, bins_g);
  const HashRange global_range{hash_range};

  std::vector<std::uint64_t> bin_counter(bins_g, 0);
  PartitionPlan plan;
  ExchangeFabric fabric(p);
  std::vector<std::vector<std::uint32_t>> hashed(p);
  std::vector<std::optional<HashGraph>> tables(p);
  std::vector<std::array<PhaseCounters, kPhaseCount>> counters(p);
  std::vector<std::exception_ptr> errors(p + 1);
  std::atomic<bool> failed{false};
  std::array<Clock::time_point, kPhaseCount + 1> marks;

  // Reduce + prefix + split search happen once, when the last shard arrives.
  auto after_partition = [&]() noexcept {
    try {
      plan = plan_from_bin_counts(bin_counter, hash_range, p);
    } catch (...) {
      errors[p] = std::current_exception();
      failed = true;
    }
    marks[1] = Clock::now();
  };
  auto after_preprocess = [&]() noexcept { marks[2] = Clock::now(); };
  auto after_exchange = [&]() noexcept { marks[3] = Clock::now(); };
  std::barrier partition_done(p, after_partition);
  std::barrier preprocess_done(p, after_preprocess);
  std::barrier exchange_done(p, after_exchange);

  auto shard_main = [&](unsigned d) {
    auto run = [&](auto&& body) {
      if (failed.load()) return;
      try {
        body();
      } catch (...) {
        errors[d] = std::current_exception();
        failed = true;
      }
    };
    auto& ctr = counters[d];
    const auto& input = per_shard_inputs[d];

    run([&] {
      auto& h = hashed[d];
      h.resize(input.size());
      for (std::size_t i = 0; i < input.size(); ++i) {
        h[i] = static_cast<std::uint32_t>(hash_key(cfg.family, input[i], global_range));
      }
      std::vector<std::uint64_t> local(bins_g, 0);
      for (const std::uint32_t v : h) ++local[v / bin_size];
      for (std::uint64_t b = 0; b < bins_g; ++b) {
        if (local[b] != 0) {
          std::atomic_ref<std::uint64_t>(bin_counter[b]).fetch_add(local[b], std::memory_order_relaxed);
        }
      }
      ctr[0].keys_hashed += input.size();
      ctr[0].keys_counted += input.size();
    });
    partition_done.arrive_and_wait();

    run([&] {
      fabric.post(d, reorganize_hashed(input, hashed[d], plan, ctr[1]));
      hashed[d] = {};
    });
    preprocess_done.arrive_and_wait();

    std::vector<std::uint32_t> received;
    run([&] {
      received = fabric.receive(d);
      ctr[2].keys_placed += received.size();
      ctr[2].bytes_exchanged += received.size() * sizeof(std::uint32_t);
    });
    exchange_done.arrive_and_wait();

    run([&] {
      BuildStats stats;
      tables[d] = HashGraph::build(received, cfg.load_factor, cfg.family,
                                   cfg.workers_per_shard, &stats);
      ctr[3].keys_hashed += stats.keys_hashed;
      ctr[3].keys_counted += stats.keys_counted;
      ctr[3].keys_placed += stats.keys_placed;
    });
  };

  marks[0] = Clock::now();
  {
    std::vector<std::jthread> workers;
    workers.reserve(p - 1);
    for (unsigned d = 1; d < p; ++d) workers.emplace_back(shard_main, d);
    shard_main(0);
  }
  marks[kPhaseCount] = Clock::now();

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (!fabric.conserved() || fabric.total_exchanged() != total_keys) {
    throw std::logic_error("exchange lost or duplicated keys");
  }

  ShardedBuild out;
  auto& report = out.report;
  report.shards = p;
  report.total_keys = total_keys;
  std::vector<HashGraph> shard_tables;
  shard_tables.reserve(p);
  for (unsigned d = 0; d < p; ++d) {
    report.shard_keys.push_back(tables[d]->size());
    shard_tables.push_back(std::move(*tables[d]));
    for (std::size_t ph = 0; ph < kPhaseCount; ++ph) report.phases[ph].counters += counters[d][ph];
  }
  for (std::size_t ph = 0; ph < kPhaseCount; ++ph) {
    report.phases[ph].wall_ns = ns_between(marks[ph], marks[ph + 1]);
  }
  out.table = ShardedHashGraph(std::move(plan), cfg.family, cfg.load_factor, std::move(shard_tables));
  report.total_build_ns = ns_between(build_start, Clock::now());
  return out;
}

QueryResult query_sharded(const ShardedHashGraph& table, std::span<const std::uint32_t> queries,
                          unsigned workers) {
  workers = std::max(1u, workers);
  QueryResult result;
  result.multiplicity.assign(queries.size(), 0);
  const unsigned p = table.shard_count();
  if (p == 0) return result;

  // Route every query through the table's own plan.
  const auto route_start = Clock::now();
  std::vector<std::uint32_t> dest(queries.size());
  parallel_for_chunks(workers, queries.size(), [&](unsigned, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) dest[i] = table.owner(queries[i]);
  });
  std::vector<std::uint64_t> counts(p, 0);
  for (const auto d : dest) ++counts[d];
  std::vector<std::uint64_t> offsets(p + 1);
  exclusive_prefix_sum(counts, offsets);
  std::fill(counts.begin(), counts.end(), 0);
  std::vector<std::uint64_t> positions(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    positions[offsets[dest[i]] + counts[dest[i]]++] = i;
  }
  std::vector<std::vector<std::uint32_t>> local_keys(p);
  for (unsigned d = 0; d < p; ++d) {
    local_keys[d].reserve(counts[d]);
    for (auto at = offsets[d]; at < offsets[d + 1]; ++at) local_keys[d].push_back(queries[positions[at]]);
  }
  result.table_build_ns = ns_between(route_start, Clock::now());

  std::vector<QueryResult> partial(p);
  const unsigned local_workers = std::max(1u, workers / p);
  parallel_for_chunks(p, p, [&](unsigned, std::size_t b, std::size_t e) {
    for (std::size_t d = b; d < e; ++d) {
      partial[d] = intersect(table.shard(static_cast<unsigned>(d)), local_keys[d], local_workers);
      for (std::size_t j = 0; j < partial[d].multiplicity.size(); ++j) {
        result.multiplicity[positions[offsets[d] + j]] = partial[d].multiplicity[j];
      }
    }
  });
  for (const auto& r : partial) {
    result.total_matches += r.total_matches;
    result.comparisons += r.comparisons;
    result.intersections += r.intersections;
    result.table_build_ns += r.table_build_ns;
    result.intersect_ns += r.intersect_ns;
  }
  return result;
}

AuditVerdict work_audit(const PhaseReport& report, std::uint64_t total_keys, unsigned shards) {
  AuditVerdict verdict;
  auto violation = [&](std::string msg) {
    verdict.passed = false;
    verdict.violations.push_back(std::move(msg));
  };
  std::uint64_t steps = 0;
  for (const auto& ph : report.phases) steps += ph.counters.search_steps;
  const std::uint64_t bound = total_keys * shards;
  if (steps > bound) {
    violation("destination search steps " + std::to_string(steps) + " exceed N*P = " +
              std::to_string(bound));
  }
  for (std::size_t i = 0; i < kPhaseCount; ++i) {
    const auto& c = report.phases[i].counters;
    const std::pair<const char*, std::uint64_t> passes[] = {
        {"hash", c.keys_hashed}, {"count", c.keys_counted}, {"place", c.keys_placed}};
    for (const auto& [pass, touched] : passes) {
      if (touched > total_keys) {
        violation(std::string(kPhaseNames[i]) + " " + pass + " pass touched " +
                  std::to_string(touched) + " keys, more than N = " + std::to_string(total_keys));
      }
    }
  }
  return verdict;
}

}  // namespace hashgraph
