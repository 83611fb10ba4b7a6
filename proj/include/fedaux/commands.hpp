#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedaux/experiment.hpp"

namespace fedaux::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kNumericalError = 4 };

struct RunOptions {
    std::filesystem::path config;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::vector<std::string>> baselines;
    bool parallel_baselines = false;
};

/// Config file plus command-line overrides, validated.
ExperimentConfig resolve_config(const RunOptions& opts);

/// Writes <out>/partition.json and prints shard sizes and class histograms.
void cmd_partition(const RunOptions& opts, std::ostream& log);

/// Writes config.json, partition.json and, per baseline, a directory with
/// metrics.csv, ledger.json and params.bin.
void cmd_train(const RunOptions& opts, std::ostream& log);

/// Writes report.txt, report.json and the plot CSVs into `out_dir`
/// (defaults to the run directory).
void cmd_report(const std::filesystem::path& run_dir, const std::optional<std::filesystem::path>& out_dir,
                const std::map<std::string, double>& kappa, std::ostream& log);

/// Runs `body`, printing any error to `err` and mapping it to an exit code.
int guarded(const std::function<void()>& body, std::ostream& err);

/// "a,b,c" -> {"a","b","c"}; empty items are dropped.
std::vector<std::string> split_list(const std::string& s);

}  // namespace fedaux::cli
