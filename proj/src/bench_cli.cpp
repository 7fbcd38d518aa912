#include "hashgraph/bench_cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hashgraph/errors.hpp"
#include "hashgraph/multishard.hpp"
#include "hashgraph/snapshot.hpp"
#include "hashgraph/workload.hpp"

namespace hashgraph::cli {
namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr const char* kReportSchema = "hashgraph-report/1";

// Column order is part of the output contract.
constexpr const char* kCsvHeader =
    "axis,value,shards,total_keys,hash_range,load_factor,duplicate_rate,"
    "partition_ns,preprocess_ns,all_to_all_ns,table_construction_ns,build_ns,"
    "build_keys_per_sec,query_keys,query_table_build_ns,intersect_ns,query_ns,"
    "query_keys_per_sec,comparisons,max_shard_keys,min_shard_keys,status";

struct WorkloadFlags {
  std::string kind = "seq";
  unsigned k = 0;  // 0: smallest k with 2^k >= count
  std::uint64_t count = 1u << 16;
  std::uint64_t rng_seed = 42;
  std::string file;
};

struct Options {
  WorkloadFlags input;
  unsigned shards = 1;
  double load_factor = 1.0;
  std::uint64_t bins_g = 0;
  std::string hash = "murmur";
  std::uint32_t seed = 0;
  std::uint64_t hash_range = 0;
  unsigned workers = 1;
  unsigned repeat = 1;
  std::string out;
  std::string format;  // empty: csv for sweep, json otherwise

  std::string save_table;
  std::string table_file;

  std::string query_kind;
  unsigned query_k = 0;
  std::uint64_t query_count = 0;
  std::uint64_t query_rng_seed = 0;
  std::string query_file;
  bool query_count_set = false;
  bool query_seed_set = false;

  std::string axis;
  std::vector<std::uint64_t> values;
  std::uint64_t max_keys = std::uint64_t{1} << 28;
  bool no_query = false;
};

unsigned auto_k(std::uint64_t count) {
  unsigned k = 1;
  while (k < 32 && (std::uint64_t{1} << k) < count) ++k;
  return k;
}

HashFamily family_of(const Options& o) {
  return HashFamily{o.hash == "identity" ? HashKind::Identity : HashKind::Murmur32, o.seed};
}

std::vector<std::uint32_t> make_keys(const WorkloadFlags& w, std::uint64_t count) {
  if (!w.file.empty()) return read_key_file(w.file).keys;
  WorkloadSpec spec;
  spec.kind = w.kind == "rand" ? WorkloadKind::RandomWithReplacement : WorkloadKind::Sequential;
  spec.k = w.k == 0 ? auto_k(count) : w.k;
  spec.count = count;
  spec.rng_seed = w.rng_seed;
  return generate(spec);
}

WorkloadFlags query_workload(const Options& o) {
  WorkloadFlags q = o.input;
  q.file = o.query_file;
  if (!o.query_kind.empty()) q.kind = o.query_kind;
  if (o.query_k != 0) q.k = o.query_k;
  q.count = o.query_count_set ? o.query_count : o.input.count;
  q.rng_seed = o.query_seed_set ? o.query_rng_seed : o.input.rng_seed + 1;
  return q;
}

ShardConfig config_of(const Options& o) {
  ShardConfig cfg;
  cfg.shards = o.shards;
  cfg.load_factor = o.load_factor;
  cfg.bins_g = o.bins_g;
  cfg.family = family_of(o);
  cfg.hash_range = o.hash_range;
  cfg.workers_per_shard = o.workers;
  return cfg;
}

// Fastest of `repeat` builds; instrumentation counters are identical across
// repeats, only the times differ.
ShardedBuild timed_build(std::span<const std::uint32_t> keys, const ShardConfig& cfg,
                         unsigned repeat) {
  const auto inputs = split_evenly(keys, cfg.shards);
  ShardedBuild best = build_sharded(inputs, cfg);
  for (unsigned r = 1; r < repeat; ++r) {
    ShardedBuild next = build_sharded(inputs, cfg);
    if (next.report.total_build_ns < best.report.total_build_ns) best = std::move(next);
  }
  return best;
}

struct QueryRun {
  QueryResult result;
  std::uint64_t query_ns = 0;
  std::uint64_t query_keys = 0;

  double keys_per_sec() const {
    return query_ns == 0 ? 0.0 : static_cast<double>(query_keys) * 1e9 / static_cast<double>(query_ns);
  }
};

QueryRun timed_query(const ShardedHashGraph& table, std::span<const std::uint32_t> queries,
                     unsigned workers) {
  QueryRun run;
  const auto t0 = Clock::now();
  run.result = query_sharded(table, queries, workers);
  run.query_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count());
  run.query_keys = queries.size();
  return run;
}

json config_json(const Options& o, const ShardedHashGraph& table) {
  json j;
  j["shards"] = table.shard_count();
  j["load_factor"] = table.load_factor();
  j["bins_g"] = table.plan().bins_g;
  j["bin_size"] = table.plan().bin_size;
  j["hash"] = table.family().kind == HashKind::Identity ? "identity" : "murmur";
  j["seed"] = table.family().seed;
  j["hash_range"] = table.plan().hash_range;
  j["workers"] = o.workers;
  return j;
}

json workload_json(const WorkloadFlags& w, std::uint64_t count) {
  json j;
  if (!w.file.empty()) {
    j["source"] = "file";
    j["file"] = w.file;
  } else {
    j["source"] = "generated";
    j["kind"] = w.kind;
    j["k"] = w.k == 0 ? auto_k(count) : w.k;
    j["rng_seed"] = w.rng_seed;
  }
  j["count"] = count;
  return j;
}

json build_json(const PhaseReport& report) {
  json j;
  j["total_keys"] = report.total_keys;
  j["shards"] = report.shards;
  j["total_build_ns"] = report.total_build_ns;
  j["phase_sum_ns"] = report.phase_sum_ns();
  j["build_keys_per_sec"] = report.build_keys_per_sec();
  json phases = json::array();
  for (std::size_t i = 0; i < kPhaseCount; ++i) {
    const auto& p = report.phases[i];
    json ph;
    ph["name"] = kPhaseNames[i];
    ph["wall_ns"] = p.wall_ns;
    ph["fraction"] = report.phase_sum_ns() == 0
                         ? 0.0
                         : static_cast<double>(p.wall_ns) / static_cast<double>(report.phase_sum_ns());
    ph["keys_hashed"] = p.counters.keys_hashed;
    ph["keys_counted"] = p.counters.keys_counted;
    ph["keys_placed"] = p.counters.keys_placed;
    ph["keys_touched"] = p.counters.keys_touched();
    ph["search_steps"] = p.counters.search_steps;
    ph["bytes_exchanged"] = p.counters.bytes_exchanged;
    phases.push_back(std::move(ph));
  }
  j["phases"] = std::move(phases);
  j["shard_keys"] = report.shard_keys;
  const auto [lo, hi] = std::minmax_element(report.shard_keys.begin(), report.shard_keys.end());
  j["max_shard_keys"] = hi == report.shard_keys.end() ? 0 : *hi;
  j["min_shard_keys"] = lo == report.shard_keys.end() ? 0 : *lo;
  const AuditVerdict audit = work_audit(report, report.total_keys, report.shards);
  j["audit"] = {{"passed", audit.passed}, {"violations", audit.violations}};
  return j;
}

json query_json(const QueryRun& run) {
  const auto& r = run.result;
  json j;
  j["query_keys"] = run.query_keys;
  j["matched_positions"] = r.matched_positions();
  j["total_matches"] = r.total_matches;
  j["comparisons"] = r.comparisons;
  j["intersections"] = r.intersections;
  j["comparisons_per_intersection"] = r.comparisons_per_intersection();
  j["table_build_ns"] = r.table_build_ns;
  j["intersect_ns"] = r.intersect_ns;
  const auto split = r.table_build_ns + r.intersect_ns;
  j["intersect_fraction"] =
      split == 0 ? 0.0 : static_cast<double>(r.intersect_ns) / static_cast<double>(split);
  j["query_ns"] = run.query_ns;
  j["query_keys_per_sec"] = run.keys_per_sec();
  return j;
}

struct CsvRow {
  std::string axis;
  std::uint64_t value = 0;
  unsigned shards = 0;
  std::uint64_t total_keys = 0;
  std::uint64_t hash_range = 0;
  double load_factor = 0.0;
  const PhaseReport* report = nullptr;
  const QueryRun* query = nullptr;
  std::string status = "ok";
};

std::string csv_line(const CsvRow& row) {
  std::ostringstream s;
  s.precision(10);
  s << row.axis << ',' << row.value << ',' << row.shards << ',' << row.total_keys << ','
    << row.hash_range << ',' << row.load_factor << ',';
  s << (row.hash_range == 0 ? 0.0 : duplicate_rate(row.total_keys, row.hash_range)) << ',';
  if (row.report != nullptr) {
    for (const auto& p : row.report->phases) s << p.wall_ns << ',';
    s << row.report->total_build_ns << ',' << row.report->build_keys_per_sec() << ',';
  } else {
    s << ",,,,,,";
  }
  if (row.query != nullptr) {
    s << row.query->query_keys << ',' << row.query->result.table_build_ns << ','
      << row.query->result.intersect_ns << ',' << row.query->query_ns << ','
      << row.query->keys_per_sec() << ',' << row.query->result.comparisons << ',';
  } else {
    s << ",,,,,,";
  }
  if (row.report != nullptr && !row.report->shard_keys.empty()) {
    const auto [lo, hi] =
        std::minmax_element(row.report->shard_keys.begin(), row.report->shard_keys.end());
    s << *hi << ',' << *lo << ',';
  } else {
    s << ",,";
  }
  std::string status = row.status;
  std::replace(status.begin(), status.end(), ',', ';');
  std::replace(status.begin(), status.end(), '\n', ' ');
  s << status;
  return s.str();
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(o.out, std::ios::binary);
  if (!file) throw FormatError("cannot open " + o.out + " for writing");
  file << text;
  if (!file) throw FormatError("failed writing " + o.out);
}

std::string render_single(const Options& o, const json& report, const CsvRow& row) {
  if (o.format == "csv") return std::string(kCsvHeader) + "\n" + csv_line(row) + "\n";
  return report.dump(2) + "\n";
}

int cmd_build(const Options& o, std::ostream& out) {
  const auto keys = make_keys(o.input, o.input.count);
  const ShardConfig cfg = config_of(o);
  const ShardedBuild built = timed_build(keys, cfg, o.repeat);
  if (!o.save_table.empty()) save_any_snapshot_file(built.table, o.save_table);

  json report;
  report["schema"] = kReportSchema;
  report["command"] = "build";
  report["config"] = config_json(o, built.table);
  report["workload"] = workload_json(o.input, keys.size());
  report["build"] = build_json(built.report);

  CsvRow row{"build", keys.size(), cfg.shards, keys.size(), built.table.plan().hash_range,
             cfg.load_factor, &built.report, nullptr};
  emit(o, render_single(o, report, row), out);
  return kExitOk;
}

int cmd_query(const Options& o, std::ostream& out) {
  json report;
  report["schema"] = kReportSchema;
  report["command"] = "query";

  ShardedHashGraph table;
  std::optional<ShardedBuild> built;
  if (!o.table_file.empty()) {
    table = load_any_snapshot_file(o.table_file);
  } else {
    const auto keys = make_keys(o.input, o.input.count);
    built = timed_build(keys, config_of(o), o.repeat);
    table = built->table;
  }
  report["config"] = config_json(o, table);
  if (built) {
    report["workload"] = workload_json(o.input, built->report.total_keys);
    report["build"] = build_json(built->report);
  } else {
    report["table"] = {{"snapshot", o.table_file}, {"total_keys", table.total_keys()}};
  }

  const WorkloadFlags qflags = query_workload(o);
  const auto queries = make_keys(qflags, qflags.count);
  const QueryRun run = timed_query(table, queries, o.workers);
  report["query_workload"] = workload_json(qflags, queries.size());
  report["query"] = query_json(run);

  CsvRow row{"query", queries.size(), table.shard_count(), table.total_keys(),
             table.plan().hash_range, table.load_factor(),
             built ? &built->report : nullptr, &run};
  emit(o, render_single(o, report, row), out);
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  std::vector<std::uint64_t> values = o.values;
  if (values.empty()) {
    if (o.axis == "shards") values = {1, 2, 4, 8};
    if (o.axis == "dup") values = {1, 2, 4, 8, 16, 32, 64, 128};
    if (o.axis == "keys") values = {1u << 16, 1u << 18, 1u << 20};
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == 0) throw ConfigError("sweep values must be positive");
    if (i > 0 && values[i] <= values[i - 1]) throw ConfigError("sweep values must be strictly increasing");
  }

  bool any_error = false;
  std::vector<std::string> lines;
  json rows = json::array();
  for (const std::uint64_t value : values) {
    Options row_opts = o;
    std::uint64_t total = o.input.count;
    if (o.axis == "shards") {
      row_opts.shards = static_cast<unsigned>(value);
      total = value * o.input.count;  // weak scaling: N_d fixed per shard
    } else if (o.axis == "dup") {
      row_opts.load_factor = static_cast<double>(value);
      row_opts.hash_range = std::max<std::uint64_t>(1, o.input.count / value);
    } else {
      total = value;
    }
    row_opts.input.count = total;

    CsvRow row{o.axis, value, row_opts.shards, total, 0, row_opts.load_factor, nullptr, nullptr};
    json jrow;
    jrow["axis"] = o.axis;
    jrow["value"] = value;
    std::optional<ShardedBuild> built;
    std::optional<QueryRun> run;
    try {
      if (total > o.max_keys) {
        throw std::length_error("key count " + std::to_string(total) + " exceeds memory guard " +
                                std::to_string(o.max_keys));
      }
      const auto keys = make_keys(row_opts.input, total);
      built = timed_build(keys, config_of(row_opts), o.repeat);
      row.hash_range = built->table.plan().hash_range;
      row.report = &built->report;
      jrow["config"] = config_json(row_opts, built->table);
      jrow["build"] = build_json(built->report);
      if (!o.no_query) {
        WorkloadFlags q = row_opts.input;
        q.rng_seed = o.input.rng_seed + 1;
        if (q.kind == "seq") q.kind = "rand";  // a fresh sample, not a copy
        const auto queries = make_keys(q, total);
        run = timed_query(built->table, queries, o.workers);
        row.query = &*run;
        jrow["query"] = query_json(*run);
      }
      jrow["status"] = "ok";
    } catch (const std::exception& e) {
      any_error = true;
      row.status = std::string("error: ") + e.what();
      jrow["status"] = row.status;
    }
    lines.push_back(csv_line(row));
    rows.push_back(std::move(jrow));
  }

  std::string text;
  if (o.format == "json") {
    json report;
    report["schema"] = kReportSchema;
    report["command"] = "sweep";
    report["axis"] = o.axis;
    report["rows"] = std::move(rows);
    text = report.dump(2) + "\n";
  } else {
    text = std::string(kCsvHeader) + "\n";
    for (const auto& l : lines) text += l + "\n";
  }
  emit(o, text, out);
  return any_error ? kExitRuntime : kExitOk;
}

void add_workload_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--kind", o.input.kind, "Key distribution")
      ->check(CLI::IsMember({"seq", "rand"}));
  cmd->add_option("--k", o.input.k, "Keys come from {1..2^k} (0 = smallest k covering --count)")
      ->check(CLI::Range(0u, 32u));
  cmd->add_option("--count", o.input.count, "Number of keys (per shard for the shards sweep)");
  cmd->add_option("--rng-seed", o.input.rng_seed, "Workload generator seed");
  cmd->add_option("--input", o.input.file, "Read input keys from a KEY1 file");
}

void add_table_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--shards", o.shards, "Shard count P")->check(CLI::PositiveNumber);
  cmd->add_option("--load-factor", o.load_factor, "Load factor C")->check(CLI::PositiveNumber);
  cmd->add_option("--bins-g", o.bins_g, "Global bin count (0 = round(sqrt(HR)))");
  cmd->add_option("--hash", o.hash, "Hash family")->check(CLI::IsMember({"murmur", "identity"}));
  cmd->add_option("--seed", o.seed, "Hash seed");
  cmd->add_option("--hash-range", o.hash_range, "Global hash range HR (0 = ceil(N / C))");
  cmd->add_option("--workers", o.workers, "Worker threads inside each shard")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--repeat", o.repeat, "Build repetitions; the fastest is reported")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Report path (default: stdout)");
  cmd->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"HashGraph static hash table benchmark harness"};
  app.require_subcommand(1);
  Options o;

  auto* build = app.add_subcommand("build", "Build a sharded table and report phase timings");
  add_workload_flags(build, o);
  add_table_flags(build, o);
  build->add_option("--save-table", o.save_table, "Write the built table (HGR1, or HGS1 if P > 1)");

  auto* query = app.add_subcommand("query", "Build (or load) a table and run a batch query");
  add_workload_flags(query, o);
  add_table_flags(query, o);
  query->add_option("--table", o.table_file, "Load the table from a snapshot instead of building");
  query->add_option("--query-kind", o.query_kind, "Query key distribution (default: --kind)")
      ->check(CLI::IsMember({"seq", "rand"}));
  query->add_option("--query-k", o.query_k, "Query keys come from {1..2^k}")
      ->check(CLI::Range(1u, 32u));
  query->add_option("--query-count", o.query_count, "Query key count (default: --count)")
      ->each([&](const std::string&) { o.query_count_set = true; });
  query->add_option("--query-rng-seed", o.query_rng_seed, "Query generator seed (default: --rng-seed + 1)")
      ->each([&](const std::string&) { o.query_seed_set = true; });
  query->add_option("--query-file", o.query_file, "Read query keys from a KEY1 file");

  auto* sweep = app.add_subcommand("sweep", "Run one build + query per axis value");
  add_workload_flags(sweep, o);
  add_table_flags(sweep, o);
  sweep->add_option("--axis", o.axis, "Swept parameter")
      ->required()
      ->check(CLI::IsMember({"shards", "dup", "keys"}));
  sweep->add_option("--values", o.values, "Comma-separated axis values")->delimiter(',');
  sweep->add_option("--max-keys", o.max_keys, "Memory guard on keys per row");
  sweep->add_flag("--no-query", o.no_query, "Skip the query half of each row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (o.format.empty()) o.format = sweep->parsed() ? "csv" : "json";

  try {
    if (build->parsed()) return cmd_build(o, out);
    if (query->parsed()) return cmd_query(o, out);
    return cmd_sweep(o, out);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace hashgraph::cli
