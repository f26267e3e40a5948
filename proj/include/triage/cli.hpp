#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace triage {

/// Exit codes returned by run_cli.
enum ExitStatus : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

/// Runs one subcommand (synth, dedup, testsets, reduce, train, sweep, report,
/// predict). `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace triage
