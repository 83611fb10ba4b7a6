#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedaux/data.hpp"
#include "fedaux/errors.hpp"
#include "fedaux/rng.hpp"

namespace fedaux::data {

std::vector<std::vector<std::size_t>> split_indices(std::size_t n, std::span<const double> ratios, std::uint64_t seed) {
    if (ratios.empty()) throw ConfigError("split needs at least one ratio");
    double total = 0.0;
    for (double r : ratios) {
        if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {stream::kSplit}));
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::vector<std::size_t>> parts;
    double cumulative = 0.0;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < ratios.size(); ++k) {
        cumulative += ratios[k];
        const std::size_t end =
            k + 1 == ratios.size() ? n : std::min(n, static_cast<std::size_t>(std::floor(cumulative * static_cast<double>(n) + 1e-9)));
        if (end <= begin) throw ConfigError("split part " + std::to_string(k) + " would be empty");
        parts.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end));
        begin = end;
    }
    return parts;
}

DatasetSplit make_split(std::size_t n, double test_fraction, double validation_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0,1)");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation_fraction must lie in [0,1)");
    const double outer[] = {1.0 - test_fraction, test_fraction};
    auto tt = split_indices(n, outer, seed);
    DatasetSplit out;
    out.test = std::move(tt[1]);
    if (validation_fraction == 0.0) {
        out.train = std::move(tt[0]);
        return out;
    }
    const double inner[] = {1.0 - validation_fraction, validation_fraction};
    auto tv = split_indices(tt[0].size(), inner, derive_seed(seed, {1}));
    for (auto i : tv[0]) out.train.push_back(tt[0][i]);
    for (auto i : tv[1]) out.validation.push_back(tt[0][i]);
    return out;
}

std::string to_string(PartitionMode m) {
    return m == PartitionMode::Iid ? "iid" : "dirichlet";
}

PartitionMode parse_partition_mode(const std::string& s) {
    if (s == "iid") return PartitionMode::Iid;
    if (s == "dirichlet") return PartitionMode::Dirichlet;
    throw ConfigError("unknown partition mode '" + s + "' (expected iid or dirichlet)");
}

namespace {

std::vector<double> dirichlet_draw(Rng& rng, std::size_t k, double alpha) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> p(k);
    double sum = 0.0;
    for (double& v : p) sum += v = gamma(rng);
    if (!(sum > 0.0)) {
        // every draw underflowed (tiny alpha): all mass on one station
        std::fill(p.begin(), p.end(), 0.0);
        p[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)] = 1.0;
        return p;
    }
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace

PartitionPlan partition(std::span<const std::size_t> pool, std::span<const int> labels, PartitionMode mode,
                        double alpha, std::size_t stations, std::uint64_t seed) {
    if (stations == 0) throw ConfigError("partition needs at least one station");
    if (stations > pool.size())
        throw ConfigError("cannot give " + std::to_string(stations) + " stations a non-empty shard from " +
                          std::to_string(pool.size()) + " samples");
    if (mode == PartitionMode::Dirichlet && !(alpha > 0.0)) throw ConfigError("dirichlet alpha must be > 0");

    PartitionPlan plan{mode, alpha, seed, stations, std::vector<std::vector<std::size_t>>(stations)};
    Rng rng(derive_seed(seed, {stream::kPartition}));
    std::vector<std::size_t> shuffled(pool.begin(), pool.end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    if (mode == PartitionMode::Iid) {
        std::stable_sort(shuffled.begin(), shuffled.end(),
                         [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
        for (std::size_t i = 0; i < shuffled.size(); ++i) plan.shards[i % stations].push_back(shuffled[i]);
    } else {
        int max_label = 0;
        for (auto i : shuffled) max_label = std::max(max_label, labels[i]);
        std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label) + 1);
        for (auto i : shuffled) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
        for (const auto& members : by_class) {
            if (members.empty()) continue;
            const auto p = dirichlet_draw(rng, stations, alpha);
            double cumulative = 0.0;
            std::size_t begin = 0;
            for (std::size_t u = 0; u < stations; ++u) {
                cumulative += p[u];
                const std::size_t end = u + 1 == stations
                                            ? members.size()
                                            : std::min(members.size(), static_cast<std::size_t>(std::floor(
                                                                           cumulative * static_cast<double>(members.size()))));
                for (std::size_t k = begin; k < end; ++k) plan.shards[u].push_back(members[k]);
                begin = std::max(begin, end);
            }
        }
        // Repair: feed each empty shard from the currently largest one.
        for (std::size_t u = 0; u < stations; ++u) {
            if (!plan.shards[u].empty()) continue;
            auto largest = std::max_element(plan.shards.begin(), plan.shards.end(),
                                            [](const auto& a, const auto& b) { return a.size() < b.size(); });
            plan.shards[u].push_back(largest->back());
            largest->pop_back();
        }
    }
    for (auto& s : plan.shards) std::sort(s.begin(), s.end());
    return plan;
}

}  // namespace fedaux::data
