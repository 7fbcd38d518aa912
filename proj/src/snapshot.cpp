#include "hashgraph/snapshot.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "hashgraph/byte_io.hpp"
#include "hashgraph/errors.hpp"

namespace hashgraph {
namespace {

HashKind read_kind(std::istream& in) {
  const auto kind = byte_io::get_le<std::uint8_t>(in, "hash family kind");
  if (kind > static_cast<std::uint8_t>(HashKind::Identity)) {
    throw FormatError("unknown hash family kind " + std::to_string(kind));
  }
  return static_cast<HashKind>(kind);
}

bool next_magic_is(std::istream& in, const char* magic) {
  char got[4] = {};
  const auto at = in.tellg();
  in.read(got, 4);
  const bool match = in.gcount() == 4 && std::string(got, 4) == magic;
  in.clear();
  in.seekg(at);
  return match;
}

}  // namespace

void save_snapshot(const HashGraph& table, std::ostream& out) {
  byte_io::put_magic(out, "HGR1");
  byte_io::put_le<std::uint64_t>(out, table.hash_range());
  byte_io::put_le<std::uint64_t>(out, table.size());
  byte_io::put_le(out, static_cast<std::uint8_t>(table.family().kind));
  byte_io::put_le<std::uint32_t>(out, table.family().seed);
  byte_io::put_f64(out, table.load_factor());
  byte_io::put_le_array(out, table.offsets());
  byte_io::put_le_array(out, table.keys());
  if (!out) throw FormatError("failed writing snapshot");
}

HashGraph load_snapshot(std::istream& in) {
  byte_io::expect_magic(in, "HGR1");
  const auto v = byte_io::get_le<std::uint64_t>(in, "V");
  const auto n = byte_io::get_le<std::uint64_t>(in, "N");
  HashFamily family;
  family.kind = read_kind(in);
  family.seed = byte_io::get_le<std::uint32_t>(in, "seed");
  const double c = byte_io::get_f64(in, "load factor");
  if (v == 0 || v > kMaxHashRange) throw FormatError("snapshot V out of range: " + std::to_string(v));

  std::vector<std::uint64_t> offsets(byte_io::checked_count(in, v + 1, sizeof(std::uint64_t)));
  byte_io::get_le_array(in, std::span<std::uint64_t>(offsets), "offsets");
  std::vector<std::uint32_t> keys(byte_io::checked_count(in, n, sizeof(std::uint32_t)));
  byte_io::get_le_array(in, std::span<std::uint32_t>(keys), "keys");
  return HashGraph::from_parts(std::move(offsets), std::move(keys), HashRange{v}, family, c);
}

void save_snapshot_file(const HashGraph& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  save_snapshot(table, out);
}

HashGraph load_snapshot_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return load_snapshot(in);
}

void save_sharded_snapshot(const ShardedHashGraph& table, std::ostream& out) {
  const auto& plan = table.plan();
  byte_io::put_magic(out, "HGS1");
  byte_io::put_le<std::uint32_t>(out, plan.shards);
  byte_io::put_le<std::uint64_t>(out, plan.hash_range);
  byte_io::put_le<std::uint64_t>(out, plan.bins_g);
  byte_io::put_le<std::uint64_t>(out, plan.bin_size);
  byte_io::put_le(out, static_cast<std::uint8_t>(table.family().kind));
  byte_io::put_le<std::uint32_t>(out, table.family().seed);
  byte_io::put_f64(out, table.load_factor());
  byte_io::put_le_array(out, std::span<const std::uint64_t>(plan.bin_splits));
  for (const auto& shard : table.shards()) save_snapshot(shard, out);
  if (!out) throw FormatError("failed writing sharded snapshot");
}

ShardedHashGraph load_sharded_snapshot(std::istream& in) {
  byte_io::expect_magic(in, "HGS1");
  PartitionPlan plan;
  plan.shards = byte_io::get_le<std::uint32_t>(in, "shard count");
  plan.hash_range = byte_io::get_le<std::uint64_t>(in, "hash range");
  plan.bins_g = byte_io::get_le<std::uint64_t>(in, "BINS_G");
  plan.bin_size = byte_io::get_le<std::uint64_t>(in, "bin size");
  HashFamily family;
  family.kind = read_kind(in);
  family.seed = byte_io::get_le<std::uint32_t>(in, "seed");
  const double c = byte_io::get_f64(in, "load factor");
  if (plan.shards == 0 || plan.bins_g < plan.shards || plan.bins_g > kMaxHashRange || plan.hash_range == 0 ||
      plan.hash_range > kMaxHashRange || plan.bin_size == 0 ||
      plan.bin_size > plan.hash_range || plan.bin_size * plan.bins_g < plan.hash_range) {
    throw FormatError("inconsistent partition plan header");
  }
  plan.bin_splits.resize(byte_io::checked_count(in, std::uint64_t{plan.shards} + 1, 8));
  byte_io::get_le_array(in, std::span<std::uint64_t>(plan.bin_splits), "bin splits");
  if (plan.bin_splits.front() != 0 || plan.bin_splits.back() != plan.bins_g) {
    throw FormatError("bin splits must span [0, BINS_G]");
  }
  for (unsigned d = 0; d < plan.shards; ++d) {
    if (plan.bin_splits[d + 1] < plan.bin_splits[d]) throw FormatError("bin splits decrease");
  }
  std::vector<HashGraph> shards;
  shards.reserve(plan.shards);
  for (unsigned d = 0; d < plan.shards; ++d) {
    shards.push_back(load_snapshot(in));
    if (shards.back().family() != family) throw FormatError("shard hash family mismatch");
    const HashRange global{plan.hash_range};
    for (const std::uint32_t key : shards.back().keys()) {
      if (plan.shard_of(hash_key(family, key, global)) != d) {
        throw FormatError("key " + std::to_string(key) + " stored outside its owning shard");
      }
    }
  }
  return ShardedHashGraph(std::move(plan), family, c, std::move(shards));
}

ShardedHashGraph load_any_snapshot_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  if (next_magic_is(in, "HGS1")) return load_sharded_snapshot(in);
  HashGraph table = load_snapshot(in);
  PartitionPlan plan;
  plan.shards = 1;
  plan.hash_range = table.hash_range();
  plan.bins_g = 1;
  plan.bin_size = table.hash_range();
  plan.bin_splits = {0, 1};
  const HashFamily family = table.family();
  const double c = table.load_factor();
  std::vector<HashGraph> shards;
  shards.push_back(std::move(table));
  return ShardedHashGraph(std::move(plan), family, c, std::move(shards));
}

void save_any_snapshot_file(const ShardedHashGraph& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  if (table.shard_count() == 1) {
    save_snapshot(table.shard(0), out);
  } else {
    save_sharded_snapshot(table, out);
  }
}

}  // namespace hashgraph
