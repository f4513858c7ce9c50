#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pqpan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitModel = 3;
inline constexpr int kExitIo = 4;

/// Runs `pqpan <args...>` (args exclude the program name) and returns the
/// process exit code. Results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pqpan::cli
