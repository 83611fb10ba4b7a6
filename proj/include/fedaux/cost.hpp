#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fedaux::cost {

/// CPU model of one base station.
struct DeviceProfile {
    double cycles_per_bit = 40.0;   // C
    double cpu_freq_hz = 2.0e9;     // f
    double capacitance = 2.0e-28;   // beta; the energy term uses 0.5 * beta
    double shard_bits = 0.0;        // L, bits processed per local iteration
    friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

void validate(const DeviceProfile& p);

/// t = C L / f
double local_iteration_time(const DeviceProfile& p);
/// E = 0.5 beta C L f^2
double iteration_energy(const DeviceProfile& p);
/// I * E
double total_energy(const DeviceProfile& p, std::uint64_t iterations);

/// Byte/size conventions for model transfers.
struct CommConvention {
    std::uint64_t bytes_per_param = 4;
    std::uint64_t bytes_per_mb = 1'000'000;
    friend bool operator==(const CommConvention&, const CommConvention&) = default;
};

/// One communication round: |P^t| uploads, |U| downloads of a model with
/// `model_params` parameters.
struct RoundComm {
    std::uint64_t participants = 0;
    std::uint64_t roster = 0;
    std::uint64_t model_params = 0;
    friend bool operator==(const RoundComm&, const RoundComm&) = default;
};

std::uint64_t round_bytes(const RoundComm& r, const CommConvention& conv) noexcept;
/// sum_t (P^t + U) * params * bytes_per_param / bytes_per_mb
double comm_cost_mb(std::span<const RoundComm> rounds, const CommConvention& conv);

struct Crossing {
    std::size_t round = 0;   // 1-based first round reaching kappa
    double megabytes = 0.0;  // communication through that round inclusive
};

/// First round whose accuracy reaches kappa, with the communication spent up
/// to and including it; nullopt when never reached. accuracy[i] belongs to
/// round i+1 and rounds[i] to the same round.
std::optional<std::size_t> first_crossing(std::span<const double> accuracy, double kappa);
std::optional<Crossing> comm_cost_to_accuracy(std::span<const double> accuracy, std::span<const RoundComm> rounds,
                                              const CommConvention& conv, double kappa);

/// Running totals of the simulation. Energy is derived from integer
/// iteration counts so it always equals total_energy() exactly.
class CostLedger {
public:
    CostLedger() = default;
    CostLedger(std::vector<DeviceProfile> stations, CommConvention conv);

    /// Adds `iterations` local SGD steps for `station`; returns that
    /// station's modeled compute seconds for this call.
    double record_local(std::size_t station, std::uint64_t iterations);
    /// Closes a round: logs its communication and its modeled duration
    /// (the slowest participant, stations run concurrently).
    void record_round(const RoundComm& comm, double round_compute_s, double wall_ms);

    const CommConvention& convention() const noexcept { return conv_; }
    const std::vector<DeviceProfile>& profiles() const noexcept { return profiles_; }
    const std::vector<RoundComm>& rounds() const noexcept { return rounds_; }
    const std::vector<double>& round_compute_s() const noexcept { return round_compute_s_; }
    const std::vector<double>& round_wall_ms() const noexcept { return round_wall_ms_; }
    const std::vector<std::uint64_t>& iterations() const noexcept { return iterations_; }

    std::uint64_t comm_bytes() const noexcept { return comm_bytes_; }
    double station_energy_j(std::size_t station) const;
    double station_compute_s(std::size_t station) const;
    double energy_j() const;
    double modeled_compute_s() const noexcept;
    double wall_ms() const noexcept;

private:
    std::vector<DeviceProfile> profiles_;
    CommConvention conv_;
    std::vector<std::uint64_t> iterations_;
    std::vector<RoundComm> rounds_;
    std::vector<double> round_compute_s_;
    std::vector<double> round_wall_ms_;
    std::uint64_t comm_bytes_ = 0;
};

}  // namespace fedaux::cost
