#pragma once

#include <iosfwd>

namespace hashgraph::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point of the benchmark harness (subcommands build, query, sweep).
/// Reports go to --out when given, otherwise to `out`; diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hashgraph::cli
