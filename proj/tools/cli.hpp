#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "matchbench/estimation.hpp"
#include "matchbench/matching.hpp"
#include "matchbench/metrics.hpp"

namespace matchbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

/// Settings shared by `match` and `evaluate`; loaded from a JSON config file
/// and then overridden by command-line flags.
struct RunConfig {
  std::uint64_t seed = 0;
  RansacConfig estimator;
  MetricConfig metrics;
  BuiltinMatcherConfig matcher;
};

RunConfig parse_run_config(std::string_view text, const std::string& source = "<memory>");
RunConfig load_run_config(const std::string& path);
std::string format_run_config(const RunConfig& cfg);

/// Entry point behind the `matchbench` binary. `args` excludes the program
/// name. Returns 0 on success, 1 on data errors, 2 on usage errors.
int run_matchbench(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace matchbench::cli
