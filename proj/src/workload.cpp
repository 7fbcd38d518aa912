#include "hashgraph/workload.hpp"

#include <fstream>
#include <string>

#include "hashgraph/byte_io.hpp"
#include "hashgraph/errors.hpp"

namespace hashgraph {

std::vector<std::uint32_t> generate(const WorkloadSpec& spec) {
  if (spec.k < 1 || spec.k > 32) {
    throw ConfigError("k must be in [1, 32], got " + std::to_string(spec.k));
  }
  const std::uint64_t universe = std::uint64_t{1} << spec.k;
  std::vector<std::uint32_t> keys(spec.count);
  switch (spec.kind) {
    case WorkloadKind::Sequential:
      if (spec.count > universe) {
        throw ConfigError("sequential workload of " + std::to_string(spec.count) +
                          " keys does not fit in {1..2^" + std::to_string(spec.k) + "}");
      }
      for (std::uint64_t i = 0; i < spec.count; ++i) keys[i] = static_cast<std::uint32_t>(i + 1);
      break;
    case WorkloadKind::RandomWithReplacement: {
      SplitMix64 rng(spec.rng_seed);
      const unsigned shift = 64 - spec.k;
      for (auto& key : keys) key = static_cast<std::uint32_t>((rng.next() >> shift) + 1);
      break;
    }
  }
  return keys;
}

double duplicate_rate(std::uint64_t count, std::uint64_t hash_range) {
  if (hash_range == 0) throw ConfigError("hash range must be >= 1");
  return static_cast<double>(count) / static_cast<double>(hash_range);
}

void write_keys(std::ostream& out, unsigned k, std::span<const std::uint32_t> keys) {
  byte_io::put_magic(out, "KEY1");
  byte_io::put_le<std::uint32_t>(out, k);
  byte_io::put_le<std::uint64_t>(out, keys.size());
  byte_io::put_le_array(out, keys);
  if (!out) throw FormatError("failed writing key data");
}

KeyFile read_keys(std::istream& in) {
  byte_io::expect_magic(in, "KEY1");
  KeyFile file;
  file.k = byte_io::get_le<std::uint32_t>(in, "k");
  const auto count = byte_io::get_le<std::uint64_t>(in, "key count");
  if (file.k < 1 || file.k > 32) throw FormatError("key file k out of range");
  file.keys.resize(byte_io::checked_count(in, count, sizeof(std::uint32_t)));
  byte_io::get_le_array(in, std::span<std::uint32_t>(file.keys), "keys");
  return file;
}

void write_key_file(const std::filesystem::path& path, unsigned k,
                    std::span<const std::uint32_t> keys) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_keys(out, k, keys);
}

KeyFile read_key_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_keys(in);
}

}  // namespace hashgraph
