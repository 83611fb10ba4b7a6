#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fedaux/cost.hpp"
#include "fedaux/mtl_model.hpp"
#include "fedaux/params.hpp"
#include "fedaux/rng.hpp"

namespace fedaux::sim {

struct BaseStation {
    std::size_t id = 0;
    mtl::LabeledSet shard;
    nn::ParamVector params;

    std::size_t data_size() const noexcept { return shard.size(); }
};

struct EdgeServer {
    nn::ParamVector global;
    std::size_t round = 0;              // rounds completed
    std::vector<std::size_t> roster;    // station ids served
};

struct RoundConfig {
    std::size_t rounds = 100;
    double eta = 0.005;
    std::size_t batch_size = 32;
    std::size_t epochs = 20;
    double participation = 1.0;
    std::uint64_t seed = 0;
    mtl::WeightingStrategy strategy;
    bool parallel_stations = true;
    bool record_wall_clock = false;
    friend bool operator==(const RoundConfig&, const RoundConfig&) = default;
};

void validate(const RoundConfig& cfg);

struct TaskMetrics {
    std::string task_id;
    mtl::TaskEvaluation validation;
    mtl::TaskEvaluation test;
};

struct RoundMetrics {
    std::size_t round = 0;  // 1-based
    std::vector<TaskMetrics> tasks;
    double total_global_loss = 0.0;
    std::uint64_t comm_bytes_cum = 0;
    double energy_j_cum = 0.0;
    double modeled_s_cum = 0.0;
    double wall_ms = 0.0;  // this round; 0 unless wall-clock recording is on
};

using MetricsSink = std::function<void(const RoundMetrics&)>;

/// Step 1: copy the global parameters to every roster station. Returns the
/// number of downlink transfers.
std::size_t broadcast(const EdgeServer& server, std::span<BaseStation> stations);

/// ceil(fraction * |roster|) stations drawn without replacement, ascending.
std::vector<std::size_t> select_participants(Rng& rng, std::span<const std::size_t> roster, double fraction);

struct StationUpdate {
    std::size_t data_size = 0;
    const nn::ParamVector* params = nullptr;
};

/// Data-size weighted mean of the submitted vectors, normalised by the
/// participants' total. Evaluated as ref + sum_u w_u (theta_u - ref) with
/// ref the first update, and clamped to the per-coordinate range of the
/// inputs, so identical inputs are returned bit-for-bit.
nn::ParamVector aggregate(std::span<const StationUpdate> updates);

/// Data-size weighted mean of station composite losses on their full
/// shards, using the expected (uniform) loss weights.
double global_loss(const mtl::HardSharedModel& model, std::span<const double> params,
                   std::span<const BaseStation> stations, mtl::LossMode mode);

/// Composite loss with expected weights for one dataset.
double expected_composite_loss(const mtl::HardSharedModel& model, std::span<const double> params,
                               const mtl::LabeledSet& data, mtl::LossMode mode);

/// One edge server with its base stations, executing synchronous rounds.
class Simulation {
public:
    Simulation(mtl::HardSharedModel model, std::vector<BaseStation> stations, nn::ParamVector initial,
               RoundConfig cfg, cost::CostLedger ledger, mtl::LabeledSet validation, mtl::LabeledSet test);

    /// broadcast -> local training -> collect -> aggregate, then evaluation
    /// of the new global model. Throws NumericalError naming the round and
    /// station on divergence.
    RoundMetrics run_round();

    /// Runs the remaining rounds, forwarding each record to `sink`.
    std::vector<RoundMetrics> run(const MetricsSink& sink = {});

    const mtl::HardSharedModel& model() const noexcept { return model_; }
    const EdgeServer& server() const noexcept { return server_; }
    const std::vector<BaseStation>& stations() const noexcept { return stations_; }
    const cost::CostLedger& ledger() const noexcept { return ledger_; }
    const RoundConfig& config() const noexcept { return cfg_; }

private:
    mtl::HardSharedModel model_;
    std::vector<BaseStation> stations_;
    EdgeServer server_;
    RoundConfig cfg_;
    cost::CostLedger ledger_;
    mtl::LabeledSet validation_;
    mtl::LabeledSet test_;
};

/// Seed of station `station`'s stream in round `round` (1-based).
std::uint64_t station_seed(std::uint64_t seed, std::size_t station, std::size_t round);

}  // namespace fedaux::sim
