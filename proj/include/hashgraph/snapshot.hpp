#pragma once

#include <filesystem>
#include <iosfwd>

#include "hashgraph/hash_graph.hpp"
#include "hashgraph/multishard.hpp"

namespace hashgraph {

// HGR1 layout (little-endian): "HGR1", u64 V, u64 N, u8 family kind,
// u32 seed, f64 C, (V + 1) u64 offsets, N u32 keys.
void save_snapshot(const HashGraph& table, std::ostream& out);
HashGraph load_snapshot(std::istream& in);
void save_snapshot_file(const HashGraph& table, const std::filesystem::path& path);
HashGraph load_snapshot_file(const std::filesystem::path& path);

// HGS1 layout (little-endian): "HGS1", u32 P, u64 HR, u64 BINS_G,
// u64 bin_size, u8 family kind, u32 seed, f64 C, (P + 1) u64 bin_splits,
// then P HGR1 records, one per shard.
void save_sharded_snapshot(const ShardedHashGraph& table, std::ostream& out);
ShardedHashGraph load_sharded_snapshot(std::istream& in);

/// Either snapshot kind from a file; a plain HGR1 table is wrapped as a
/// single-shard table whose global range equals its own range.
ShardedHashGraph load_any_snapshot_file(const std::filesystem::path& path);
void save_any_snapshot_file(const ShardedHashGraph& table, const std::filesystem::path& path);

}  // namespace hashgraph
