#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace copcp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `copcp` tool. `args` excludes the program name.
///
///   run --config <path> [--jobs N] [--seed S] [--out DIR] [--copula NAME]...
///       [--gumbel-estimator tau|mple] [--target NAME]... [--folds K]
///   synth --n N --m M --dependence D --seed S --out FILE [--d FEATURES]
///   report <report.json>
///
/// Returns 0 on success, 2 for usage/config/input errors, 1 for failures
/// during computation.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace copcp
