#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "noisestab/experiments.hpp"
#include "noisestab/report.hpp"

namespace noisestab {

/// Runs a resolved experiment and collects its report (timing fields empty).
Report run_experiment(const ExperimentConfig& cfg);

/// Command-line entry point. `args` excludes the program name; `env_seed` is
/// the value of NOISESTAB_SEED, if set. Returns the process exit code:
/// 0 all verdicts hold or sit in the equality band, 2 any violation,
/// 1 usage, config or hypothesis error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            std::optional<std::string> env_seed = std::nullopt);

int cli_main(int argc, char** argv);

}  // namespace noisestab
