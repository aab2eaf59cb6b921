#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "thermoflow/config.hpp"
#include "thermoflow/io.hpp"

namespace thermoflow {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2, kExitRuntime = 3 };

struct RunOutcome {
    RunManifest manifest;
    State<double> final_state;
};

/// Runs one trajectory into out_dir: timeseries.csv, snapshots, manifest.json.
RunOutcome run_to_directory(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Parses `key=a:b:n` into the key and n evenly spaced values from a to b.
std::pair<std::string, std::vector<double>> parse_sweep(const std::string& spec);

std::string format_report_table(const std::vector<CheckReport>& reports);

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace thermoflow
