#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ftls/io/spec.hpp"
#include "ftls/io/table.hpp"

namespace ftls::io {

/// Process exit codes. NoProfile means the mathematics rules out a profile;
/// Numerical means the computation itself failed.
enum ExitCode : int { kExitOk = 0, kExitSpec = 1, kExitNoProfile = 2, kExitNumerical = 3 };

struct RunResult {
    int exit_code = kExitOk;
    std::string message;
    Manifest manifest;
};

/// Dispatches a validated spec to the owning module, writes its artifacts
/// and manifest.json under spec.output.dir and never throws for model or
/// numerical failures (they become exit codes).
RunResult run(const ExperimentSpec& spec);

/// Runs independent specs on up to `jobs` threads. Results keep input order.
std::vector<RunResult> run_all(const std::vector<ExperimentSpec>& specs, std::size_t jobs);

/// Largest exit code of a batch.
int combined_exit(const std::vector<RunResult>& results);

}  // namespace ftls::io
