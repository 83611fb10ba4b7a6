#include <gtest/gtest.h>

#include "fedaux/cost.hpp"
#include "fedaux/errors.hpp"

using namespace fedaux;
using namespace fedaux::cost;

namespace {

DeviceProfile reference_device(double bits = 1e6) { return {40.0, 2.0e9, 2.0e-28, bits}; }

}  // namespace

TEST(Cost, IterationTime) {
    EXPECT_NEAR(local_iteration_time(reference_device()), 0.02, 1e-15);
    EXPECT_EQ(local_iteration_time(reference_device(0.0)), 0.0);
    auto fast = reference_device();
    fast.cpu_freq_hz *= 2.0;
    EXPECT_EQ(local_iteration_time(fast), local_iteration_time(reference_device()) / 2.0);
}

TEST(Cost, IterationEnergy) {
    EXPECT_NEAR(iteration_energy(reference_device()), 0.016, 1e-15);
    EXPECT_EQ(iteration_energy(reference_device(0.0)), 0.0);
    auto fast = reference_device();
    fast.cpu_freq_hz *= 2.0;
    EXPECT_EQ(iteration_energy(fast), 4.0 * iteration_energy(reference_device()));
}

TEST(Cost, TotalEnergy) {
    EXPECT_NEAR(total_energy(reference_device(), 100), 1.6, 1e-13);
    EXPECT_EQ(total_energy(reference_device(), 0), 0.0);
    EXPECT_EQ(total_energy(reference_device(), 1), iteration_energy(reference_device()));
}

TEST(Cost, LinearScaling) {
    auto twice_bits = reference_device(2e6);
    auto twice_cycles = reference_device();
    twice_cycles.cycles_per_bit *= 2.0;
    EXPECT_EQ(local_iteration_time(twice_bits), 2.0 * local_iteration_time(reference_device()));
    EXPECT_EQ(local_iteration_time(twice_cycles), 2.0 * local_iteration_time(reference_device()));
    EXPECT_EQ(iteration_energy(twice_bits), 2.0 * iteration_energy(reference_device()));
    EXPECT_EQ(iteration_energy(twice_cycles), 2.0 * iteration_energy(reference_device()));
}

TEST(Cost, ProfileValidation) {
    EXPECT_NO_THROW(validate(reference_device(0.0)));
    auto bad = reference_device();
    bad.cpu_freq_hz = 0.0;
    EXPECT_THROW(validate(bad), ConfigError);
    bad = reference_device();
    bad.capacitance = -1.0;
    EXPECT_THROW(validate(bad), ConfigError);
    bad = reference_device(-1.0);
    EXPECT_THROW(validate(bad), ConfigError);
}

TEST(Cost, CommunicationExamples) {
    const CommConvention conv;
    const std::vector<RoundComm> one{{2, 2, 10}};
    EXPECT_EQ(round_bytes(one[0], conv), 160u);
    EXPECT_DOUBLE_EQ(comm_cost_mb(one, conv), 1.6e-4);
    const std::vector<RoundComm> six_stations{{6, 6, 257358}};
    EXPECT_EQ(round_bytes(six_stations[0], conv), 12353184u);
    EXPECT_DOUBLE_EQ(comm_cost_mb(six_stations, conv), 12.353184);
    EXPECT_EQ(comm_cost_mb(std::vector<RoundComm>{}, conv), 0.0);
    const CommConvention mib{4, 1u << 20};
    EXPECT_DOUBLE_EQ(comm_cost_mb(six_stations, mib), 12353184.0 / 1048576.0);
}

TEST(Cost, FirstCrossing) {
    const std::vector<double> acc{0.5, 0.7, 0.82, 0.85};
    EXPECT_EQ(first_crossing(acc, 0.8), 3u);
    EXPECT_EQ(first_crossing(acc, 0.1), 1u);
    EXPECT_EQ(first_crossing(acc, 0.99), std::nullopt);
    EXPECT_EQ(first_crossing(std::vector<double>{0.5, 0.7, 0.82}, 0.8), 3u);
    EXPECT_EQ(first_crossing(acc, 0.82), 3u);
}

TEST(Cost, CommToAccuracyIsMonotoneInKappa) {
    const std::vector<double> acc{0.2, 0.35, 0.35, 0.6, 0.61, 0.9};
    const std::vector<RoundComm> log(6, RoundComm{3, 6, 1000});
    const CommConvention conv;
    const auto hit = comm_cost_to_accuracy(acc, log, conv, 0.6);
    ASSERT_TRUE(hit);
    EXPECT_EQ(hit->round, 4u);
    EXPECT_DOUBLE_EQ(hit->megabytes, 4.0 * 9.0 * 1000.0 * 4.0 / 1e6);
    double last = 0.0;
    for (int step = 1; step <= 18; ++step) {
        const double k = 0.05 * step;
        const auto c = comm_cost_to_accuracy(acc, log, conv, k);
        ASSERT_TRUE(c);
        EXPECT_GE(c->megabytes, last);
        last = c->megabytes;
    }
    EXPECT_FALSE(comm_cost_to_accuracy(acc, log, conv, 0.95));
    EXPECT_THROW((void)comm_cost_to_accuracy(acc, std::vector<RoundComm>(2, RoundComm{1, 1, 1}), conv, 0.9),
                 InternalError);
}

TEST(CostLedger, TotalsEqualClosedForms) {
    std::vector<DeviceProfile> devices{reference_device(1e6), reference_device(3.5e5), {30.0, 1.5e9, 1e-28, 7e5}};
    CostLedger ledger(devices, {});
    const std::vector<std::vector<std::uint64_t>> iters{{20, 40, 20}, {20, 0, 60}, {0, 40, 20}};
    std::uint64_t expected_bytes = 0;
    double last_energy = 0.0;
    for (std::size_t t = 0; t < iters.size(); ++t) {
        double slowest = 0.0;
        std::uint64_t participants = 0;
        for (std::size_t u = 0; u < 3; ++u) {
            if (iters[t][u] == 0) continue;
            ++participants;
            slowest = std::max(slowest, ledger.record_local(u, iters[t][u]));
        }
        ledger.record_round({participants, 3, 5000}, slowest, 0.0);
        expected_bytes += (participants + 3) * 5000 * 4;
        EXPECT_GE(ledger.energy_j(), last_energy);
        last_energy = ledger.energy_j();
    }
    EXPECT_EQ(ledger.comm_bytes(), expected_bytes);
    EXPECT_EQ(static_cast<double>(ledger.comm_bytes()) / 1e6, comm_cost_mb(ledger.rounds(), ledger.convention()));
    for (std::size_t u = 0; u < 3; ++u) {
        const std::uint64_t total = iters[0][u] + iters[1][u] + iters[2][u];
        EXPECT_EQ(ledger.iterations()[u], total);
        EXPECT_EQ(ledger.station_energy_j(u), total_energy(devices[u], total));
    }
    // round time is the slowest participant
    const double round1 = std::max({20.0 * local_iteration_time(devices[0]), 40.0 * local_iteration_time(devices[1]),
                                    20.0 * local_iteration_time(devices[2])});
    EXPECT_EQ(ledger.round_compute_s()[0], round1);
    EXPECT_THROW(CostLedger(devices, {0, 1}), ConfigError);
}
