#pragma once

// Scenario execution and run reports.
//
// A run writes into <out_root>/<run name>/ the method outputs, config.json
// (the resolved configuration), checks.json (invariant checks with their
// tolerances) and finally manifest.json, which lists every other file with
// its SHA-256 and size. On failure error.json replaces the outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kvn/scenario.hpp"

namespace kvn {

inline constexpr const char* tool_name = "kvnft";
inline constexpr const char* tool_version = "1.0.0";

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_runtime = 2, exit_tolerance = 3 };

struct RunOptions {
    std::filesystem::path out_root;
    std::optional<std::uint64_t> seed;
};

struct RunOutcome {
    int exit_code = exit_ok;
    std::filesystem::path run_dir;
    std::string message;
};

/// Run directory name: the config name, or <method>-<first 12 hex digits of
/// the config hash>.
std::string run_name(const ScenarioConfig& config, const std::string& config_text);

RunOutcome run_scenario(ScenarioConfig config, const std::string& config_text, const RunOptions& options);

struct ReportOutcome {
    int exit_code = exit_ok;
    std::filesystem::path summary_md;
    std::filesystem::path summary_json;
    std::size_t failed_checks = 0;
    std::size_t checksum_mismatches = 0;
    std::size_t missing_manifests = 0;
};

/// Verifies manifests, aggregates checks and tables into summary.md and
/// summary.json under out_dir. Exit code 3 when anything is out of tolerance,
/// tampered or missing.
ReportOutcome report_runs(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_dir);

}  // namespace kvn
