#include "fedaux/cost.hpp"

#include <cmath>
#include <numeric>

#include "fedaux/errors.hpp"

namespace fedaux::cost {

void validate(const DeviceProfile& p) {
    if (!(p.cycles_per_bit > 0.0)) throw ConfigError("device cycles_per_bit must be > 0");
    if (!(p.cpu_freq_hz > 0.0)) throw ConfigError("device cpu_freq_hz must be > 0");
    if (!(p.capacitance > 0.0)) throw ConfigError("device capacitance must be > 0");
    if (!(p.shard_bits >= 0.0) || !std::isfinite(p.shard_bits)) throw ConfigError("device shard_bits must be >= 0");
}

double local_iteration_time(const DeviceProfile& p) {
    return p.cycles_per_bit * p.shard_bits / p.cpu_freq_hz;
}

double iteration_energy(const DeviceProfile& p) {
    return 0.5 * p.capacitance * p.cycles_per_bit * p.shard_bits * p.cpu_freq_hz * p.cpu_freq_hz;
}

double total_energy(const DeviceProfile& p, std::uint64_t iterations) {
    return static_cast<double>(iterations) * iteration_energy(p);
}

std::uint64_t round_bytes(const RoundComm& r, const CommConvention& conv) noexcept {
    return (r.participants + r.roster) * r.model_params * conv.bytes_per_param;
}

double comm_cost_mb(std::span<const RoundComm> rounds, const CommConvention& conv) {
    std::uint64_t bytes = 0;
    for (const auto& r : rounds) bytes += round_bytes(r, conv);
    return static_cast<double>(bytes) / static_cast<double>(conv.bytes_per_mb);
}

std::optional<std::size_t> first_crossing(std::span<const double> accuracy, double kappa) {
    for (std::size_t i = 0; i < accuracy.size(); ++i)
        if (accuracy[i] >= kappa) return i + 1;
    return std::nullopt;
}

std::optional<Crossing> comm_cost_to_accuracy(std::span<const double> accuracy, std::span<const RoundComm> rounds,
                                              const CommConvention& conv, double kappa) {
    const auto hit = first_crossing(accuracy, kappa);
    if (!hit) return std::nullopt;
    if (*hit > rounds.size())
        throw InternalError("accuracy series is longer than the communication log");
    return Crossing{*hit, comm_cost_mb(rounds.first(*hit), conv)};
}

CostLedger::CostLedger(std::vector<DeviceProfile> stations, CommConvention conv)
    : profiles_(std::move(stations)), conv_(conv), iterations_(profiles_.size(), 0) {
    for (const auto& p : profiles_) validate(p);
    if (conv_.bytes_per_param == 0 || conv_.bytes_per_mb == 0)
        throw ConfigError("bytes_per_param and bytes_per_mb must be >= 1");
}

double CostLedger::record_local(std::size_t station, std::uint64_t iterations) {
    iterations_.at(station) += iterations;
    return static_cast<double>(iterations) * local_iteration_time(profiles_[station]);
}

void CostLedger::record_round(const RoundComm& comm, double round_compute_s, double wall_ms) {
    rounds_.push_back(comm);
    round_compute_s_.push_back(round_compute_s);
    round_wall_ms_.push_back(wall_ms);
    comm_bytes_ += round_bytes(comm, conv_);
}

double CostLedger::station_energy_j(std::size_t station) const {
    return total_energy(profiles_.at(station), iterations_.at(station));
}

double CostLedger::station_compute_s(std::size_t station) const {
    return static_cast<double>(iterations_.at(station)) * local_iteration_time(profiles_.at(station));
}

double CostLedger::energy_j() const {
    double total = 0.0;
    for (std::size_t u = 0; u < profiles_.size(); ++u) total += station_energy_j(u);
    return total;
}

double CostLedger::modeled_compute_s() const noexcept {
    return std::accumulate(round_compute_s_.begin(), round_compute_s_.end(), 0.0);
}

double CostLedger::wall_ms() const noexcept {
    return std::accumulate(round_wall_ms_.begin(), round_wall_ms_.end(), 0.0);
}

}  // namespace fedaux::cost
