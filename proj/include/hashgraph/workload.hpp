#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace hashgraph {

/// SplitMix64 (Steele, Lea, Flood 2014): state += 0x9e3779b97f4a7c15, then
/// the 64-bit mix with shifts 30/27/31 and multipliers 0xbf58476d1ce4e5b9,
/// 0x94d049bb133111eb. Pinned so generated key sets are reproducible.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

enum class WorkloadKind {
  Sequential,
  RandomWithReplacement,
};

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::Sequential;
  /// Keys are drawn from {1, ..., 2^k}; k in [1, 32].
  unsigned k = 20;
  std::uint64_t count = 0;
  std::uint64_t rng_seed = 42;
  /// Global hash range to use instead of ceil(N / C), for duplicate sweeps.
  std::optional<std::uint64_t> table_range_override;
};

/// Sequential: 1..count (count <= 2^k). RandomWithReplacement: `count`
/// uniform draws from {1..2^k}, the top k bits of successive SplitMix64
/// outputs plus one. Keys are stored as u32, so 2^32 (k = 32) wraps to 0.
std::vector<std::uint32_t> generate(const WorkloadSpec& spec);

/// Average occurrences per hash value: count / hash_range.
double duplicate_rate(std::uint64_t count, std::uint64_t hash_range);

/// Key file: "KEY1", u32 k, u64 count, then count u32 keys, all little-endian.
struct KeyFile {
  unsigned k = 32;
  std::vector<std::uint32_t> keys;
};

void write_keys(std::ostream& out, unsigned k, std::span<const std::uint32_t> keys);
KeyFile read_keys(std::istream& in);
void write_key_file(const std::filesystem::path& path, unsigned k,
                    std::span<const std::uint32_t> keys);
KeyFile read_key_file(const std::filesystem::path& path);

}  // namespace hashgraph
