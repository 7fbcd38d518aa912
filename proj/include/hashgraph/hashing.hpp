#pragma once

#include <cstdint>

namespace hashgraph {

enum class HashKind : std::uint8_t {
  Murmur32 = 0,
  Identity = 1,
};

// MurmurHash3 32-bit finalizer (fmix32).
constexpr std::uint32_t murmur3_fmix32(std::uint32_t h) noexcept {
  h ^= h >> 16;
  h *= 0x85ebca6bu;
  h ^= h >> 13;
  h *= 0xc2b2ae35u;
  h ^= h >> 16;
  return h;
}

/// A hash function over 32-bit keys. The seed is XORed into the key before
/// finalization for Murmur32 and ignored by Identity.
struct HashFamily {
  HashKind kind = HashKind::Murmur32;
  std::uint32_t seed = 0;

  constexpr std::uint32_t raw(std::uint32_t key) const noexcept {
    return kind == HashKind::Identity ? key : murmur3_fmix32(key ^ seed);
  }

  friend constexpr bool operator==(const HashFamily&, const HashFamily&) = default;
};

/// Number of hash values V. Always >= 1 and at most 2^32.
struct HashRange {
  std::uint64_t size = 1;

  friend constexpr bool operator==(const HashRange&, const HashRange&) = default;
};

inline constexpr std::uint64_t kMaxHashRange = std::uint64_t{1} << 32;

/// Hash value of `key` in [0, range.size).
constexpr std::uint64_t hash_key(const HashFamily& family, std::uint32_t key,
                                 HashRange range) noexcept {
  return family.raw(key) % range.size;
}

}  // namespace hashgraph
