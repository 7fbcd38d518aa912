#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "hashgraph/errors.hpp"

// Little-endian primitives shared by the snapshot and key-file formats.
namespace hashgraph::byte_io {

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>(u & 0xffu);
    u = static_cast<U>(u >> 8);
  }
  out.write(buf, sizeof(U));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  using U = std::make_unsigned_t<T>;
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
  U u = 0;
  for (std::size_t i = sizeof(U); i-- > 0;) u = static_cast<U>((u << 8) | buf[i]);
  return static_cast<T>(u);
}

// Arrays go out in one write on little-endian hosts.
template <typename T>
void put_le_array(std::ostream& out, std::span<const T> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (const T v : values) put_le(out, v);
  }
}

template <typename T>
void get_le_array(std::istream& in, std::span<T> values, const char* what) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(values.size_bytes()))) {
      throw FormatError(std::string("truncated input while reading ") + what);
    }
  } else {
    for (T& v : values) v = get_le<T>(in, what);
  }
}

// Rejects element counts that exceed what a seekable stream still holds,
// before anything is allocated for them.
inline std::size_t checked_count(std::istream& in, std::uint64_t count, std::size_t elem_size) {
  const auto here = in.tellg();
  if (here != std::streampos(-1)) {
    in.seekg(0, std::ios::end);
    const auto end = in.tellg();
    in.seekg(here);
    const auto remaining = static_cast<std::uint64_t>(end - here);
    if (count > remaining / elem_size) {
      throw FormatError("header declares " + std::to_string(count) +
                        " elements but the input is too short");
    }
  }
  return static_cast<std::size_t>(count);
}

inline void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

inline double get_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(in, what));
}

inline void put_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char got[4] = {};
  if (!in.read(got, 4)) throw FormatError(std::string("missing magic, expected ") + magic);
  if (std::memcmp(got, magic, 4) != 0) {
    throw FormatError(std::string("bad magic '") + std::string(got, 4) + "', expected " + magic);
  }
}

}  // namespace hashgraph::byte_io
