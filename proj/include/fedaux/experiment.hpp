#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedaux/architecture.hpp"
#include "fedaux/cost.hpp"
#include "fedaux/data.hpp"
#include "fedaux/fl_sim.hpp"

namespace fedaux {

// ---- experiment configuration ----

struct DatasetConfig {
    std::string source = "synthetic";  // synthetic | csv
    std::string csv_path;
    std::vector<std::string> class_names;  // optional closed label set for csv
    data::SynthSpec synthetic;
    std::size_t aux_bins = 3;
    double test_fraction = 0.1;
    double validation_fraction = 0.1;
    friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct PartitionConfig {
    data::PartitionMode mode = data::PartitionMode::Dirichlet;
    double alpha = 0.5;
    std::size_t stations = 6;
    friend bool operator==(const PartitionConfig&, const PartitionConfig&) = default;
};

struct TaskConfig {
    std::string id;
    mtl::TaskRole role = mtl::TaskRole::Auxiliary;
    int num_classes = 0;  // 0: take from the data
    friend bool operator==(const TaskConfig&, const TaskConfig&) = default;
};

struct TrainingConfig {
    std::size_t rounds = 100;
    double eta = 0.005;
    std::size_t batch_size = 32;
    std::size_t epochs = 20;
    double participation = 1.0;
    mtl::ResampleGranularity rlw_resample = mtl::ResampleGranularity::PerBatch;
    bool parallel_stations = true;
    bool record_wall_clock = false;
    friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct DeviceConfig {
    double cycles_per_bit = 40.0;
    double cpu_freq_hz = 2.0e9;
    double capacitance = 2.0e-28;
    friend bool operator==(const DeviceConfig&, const DeviceConfig&) = default;
};

struct CostConfig {
    std::uint64_t bytes_per_param = 4;
    std::uint64_t bytes_per_mb = 1'000'000;
    std::uint64_t feature_bits = 32;  // per feature value
    std::uint64_t label_bits = 32;    // per label per task
    friend bool operator==(const CostConfig&, const CostConfig&) = default;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "runs/default";
    DatasetConfig dataset;
    PartitionConfig partition;
    std::vector<TaskConfig> tasks{{"service", mtl::TaskRole::Main, 0},
                                  {"duration", mtl::TaskRole::Auxiliary, 0},
                                  {"bandwidth", mtl::TaskRole::Auxiliary, 0}};
    std::optional<mtl::ArchitectureSpec> model;  // default_architecture() when absent
    TrainingConfig training;
    std::map<std::string, double> targets;       // kappa per task id
    std::vector<std::string> baselines{"fedaux-rlw", "fedaux-elw", "mtdnn-rlw", "mtdnn-elw", "fedavg-single"};
    DeviceConfig device;
    std::vector<DeviceConfig> station_devices;   // optional per-station override
    CostConfig cost;
    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Strict parse: unknown keys, wrong types and inconsistent values throw
/// ConfigError.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Full canonical JSON (every field, defaults included).
std::string config_to_json_text(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

// ---- baselines ----

enum class BaselineKind { FedAuxRlw, FedAuxElw, MtdnnRlw, MtdnnElw, FedAvgSingle, BaselineIid };

struct Baseline {
    BaselineKind kind = BaselineKind::FedAuxRlw;
    std::string task;  // FedAvgSingle only; empty = main task

    std::string name() const;
    /// File-system friendly name ("fedavg-single:duration" -> "fedavg-single-duration").
    std::string dir_name() const;
};

Baseline parse_baseline(const std::string& name);

// ---- data preparation ----

/// Everything derived from the dataset before training starts; shared by
/// every baseline of an experiment.
struct PreparedData {
    data::Dataset dataset;                 // aux labels derived for every aux column
    data::DatasetSplit split;
    data::PartitionPlan plan;              // configured partition of split.train
    data::PartitionPlan iid_plan;          // used by baseline-iid
    std::vector<data::QuantileBins> bins;  // csv only, one per aux column
    std::vector<mtl::TaskSpec> tasks;      // resolved task list (config order)
};

PreparedData prepare_data(const ExperimentConfig& cfg);

/// Features and the label columns of `tasks` for the given dataset rows.
mtl::LabeledSet make_labeled_set(const data::Dataset& ds, std::span<const std::size_t> rows,
                                 std::span<const mtl::TaskSpec> tasks);

/// Bits processed per local iteration for a shard: samples * (features *
/// feature_bits + tasks * label_bits).
double shard_bits(std::size_t samples, std::size_t features, std::size_t tasks, const CostConfig& cost);

std::string partition_manifest_json(const ExperimentConfig& cfg, const PreparedData& prepared);

// ---- running ----

struct ExperimentResult {
    Baseline baseline;
    std::vector<mtl::TaskSpec> tasks;
    std::size_t param_count = 0;
    std::vector<sim::RoundMetrics> rounds;
    cost::CostLedger ledger;
    nn::ParamVector final_params;
    std::vector<std::size_t> shard_sizes;
};

/// Builds and runs the simulation for one baseline. Deterministic in
/// (cfg, prepared, baseline).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const PreparedData& prepared, const Baseline& baseline,
                                const sim::MetricsSink& sink = {});

}  // namespace fedaux
