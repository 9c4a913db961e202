#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vdpcli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one vdpfit invocation. `args` excludes the program name. Normal
/// output goes to `out`, the one-line diagnostic of a failure to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vdpcli
