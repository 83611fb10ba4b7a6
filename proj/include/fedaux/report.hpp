#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedaux/cost.hpp"
#include "fedaux/fl_sim.hpp"

namespace fedaux::report {

// ---- run artifacts ----

struct MetricsRow {
    std::size_t round = 0;
    std::string task_id;
    std::string split;  // validation | test
    double accuracy = 0.0;
    double loss = 0.0;
    double total_global_loss = 0.0;
    std::uint64_t comm_bytes_cum = 0;
    double energy_j_cum = 0.0;
    double modeled_s_cum = 0.0;
    double wall_ms = 0.0;
    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// One row per (round, task, split), validation before test. Rounds without
/// a validation set only get test rows.
std::vector<MetricsRow> to_rows(const std::vector<sim::RoundMetrics>& rounds, bool with_validation);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

/// Totals, device profiles, per-station iterations and the per-round
/// communication log.
std::string ledger_json_text(const cost::CostLedger& ledger);

/// round, comm_bytes_cum, energy_j_cum, modeled_s_cum, wall_ms_cum.
void write_ledger_rounds_csv(std::ostream& out, const std::vector<sim::RoundMetrics>& rounds);

struct LedgerSummary {
    cost::CommConvention convention;
    std::vector<cost::RoundComm> rounds;
    std::uint64_t comm_bytes = 0;
    double energy_j = 0.0;
    double modeled_compute_s = 0.0;
};

LedgerSummary read_ledger_json(const std::filesystem::path& path);

// ---- comparison report ----

struct TaskSummary {
    std::string task_id;
    std::optional<double> kappa;
    std::optional<std::size_t> rounds_to_kappa;
    std::optional<double> comm_mb_to_kappa;
    std::optional<double> energy_j_to_kappa;
    double final_accuracy = 0.0;
};

struct BaselineSummary {
    std::string baseline;
    std::size_t rounds = 0;
    std::vector<TaskSummary> tasks;
    double final_total_global_loss = 0.0;
    double total_comm_mb = 0.0;
    double total_energy_j = 0.0;
    double modeled_compute_s = 0.0;
};

struct ComparisonReport {
    std::map<std::string, double> kappa;
    std::vector<BaselineSummary> baselines;
};

/// Test-split first crossing per task; communication via the ledger's round
/// log, energy from the metrics row of the crossing round.
BaselineSummary summarize(const std::string& baseline, const std::vector<MetricsRow>& rows,
                          const LedgerSummary& ledger, const std::map<std::string, double>& kappa);

/// Reads config.json, then metrics.csv and ledger.json of every baseline in
/// its list. `kappa` entries override the config targets.
ComparisonReport build_report(const std::filesystem::path& run_dir, const std::map<std::string, double>& kappa);

std::string report_text(const ComparisonReport& r);
std::string report_json_text(const ComparisonReport& r);

/// accuracy_<task>.csv (test accuracy per round, one column per baseline)
/// and global_loss.csv. Returns the written paths.
std::vector<std::filesystem::path> write_plot_csvs(const std::filesystem::path& run_dir,
                                                   const std::filesystem::path& out_dir);

}  // namespace fedaux::report
