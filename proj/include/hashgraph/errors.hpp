#pragma once

#include <stdexcept>
#include <string>

namespace hashgraph {

/// Invalid parameters: non-positive load factor, BINS_G < P, empty hash range.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or mismatched on-disk data (snapshots, key files).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hashgraph
