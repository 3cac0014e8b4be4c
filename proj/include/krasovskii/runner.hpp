#pragma once

#include "krasovskii/config.hpp"

#include <filesystem>
#include <iosfwd>

namespace krasovskii {

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitInvalid = 2 };

/// Executes a parsed config, writing report.json and task CSVs into `out_dir`.
/// Returns kExitPass or kExitFail.
int execute(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

/// Loads, validates and executes; validation problems are printed to `err`
/// and yield kExitInvalid.
int run_config_file(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& log,
                    std::ostream& err);

}  // namespace krasovskii
