#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace noisy::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Runs one noisyctl invocation. `args` excludes the program name. Reports go
// to `out`, diagnostics and usage errors to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace noisy::cli
