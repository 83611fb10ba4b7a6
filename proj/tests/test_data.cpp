#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "fedaux/data.hpp"
#include "fedaux/errors.hpp"
#include "fedaux/rng.hpp"

using namespace fedaux;
using namespace fedaux::data;

namespace {

RawFlows parse(const std::string& text, const CsvSchema& schema = {}) {
    std::istringstream in(text);
    return parse_flows(in, "mem.csv", schema);
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

std::vector<std::size_t> iota_pool(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

// Plug-in mutual information (nats) between two label columns.
double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> pa, pb;
    const double n = static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0 / n;
        pa[a[i]] += 1.0 / n;
        pb[b[i]] += 1.0 / n;
    }
    double mi = 0.0;
    for (const auto& [k, p] : joint) mi += p * std::log(p / (pa[k.first] * pb[k.second]));
    return mi;
}

}  // namespace

TEST(Flows, ParsesHandWrittenFile) {
    const auto raw = parse("label,duration,bandwidth,f_0,f_1\nyoutube,1.5,200,0.25,-1\n\"drive\",2,1e3,3,4.5\n");
    ASSERT_EQ(raw.dataset.size(), 2u);
    EXPECT_EQ(raw.dataset.feature_length, 2u);
    EXPECT_EQ(raw.dataset.class_names, (std::vector<std::string>{"drive", "youtube"}));
    EXPECT_EQ(raw.dataset.samples[0].main_label, 1);
    EXPECT_EQ(raw.dataset.samples[1].main_label, 0);
    EXPECT_EQ(raw.dataset.samples[0].features, (std::vector<double>{0.25, -1.0}));
    EXPECT_EQ(raw.dataset.samples[1].features, (std::vector<double>{3.0, 4.5}));
    EXPECT_EQ(raw.duration, (std::vector<double>{1.5, 2.0}));
    EXPECT_EQ(raw.bandwidth, (std::vector<double>{200.0, 1000.0}));
}

TEST(Flows, ErrorsNameTheLine) {
    EXPECT_THROW(parse(""), DataError);
    EXPECT_NE(message_of([] { parse("label,duration,bandwidth,f_0\na,1,2,3\nb,1,2\n"); }).find(":3"),
              std::string::npos);
    EXPECT_NE(message_of([] { parse("label,duration,bandwidth,f_0\na,1,2,x\n"); }).find(":2"), std::string::npos);
    EXPECT_NE(message_of([] { parse("label,duration,bandwidth,f_0\na,1,2,nan\n"); }).find(":2"),
              std::string::npos);
    EXPECT_THROW(parse("label,bandwidth,duration,f_0\na,1,2,3\n"), DataError);
    EXPECT_THROW(parse("label,duration,bandwidth,f_1\na,1,2,3\n"), DataError);
    const CsvSchema closed{{"a", "b"}};
    EXPECT_NE(message_of([&] { parse("label,duration,bandwidth,f_0\na,1,2,3\nc,1,2,3\n", closed); }).find(":3"),
              std::string::npos);
}

TEST(Flows, MissingFileNamesPath) {
    const auto msg = message_of([] { load_flows("/nonexistent/flows.csv"); });
    EXPECT_NE(msg.find("/nonexistent/flows.csv"), std::string::npos);
    EXPECT_THROW(load_flows("/nonexistent/flows.csv"), DataError);
}

TEST(Flows, LargeFileKeepsEveryRow) {
    std::ostringstream text;
    text << "label,duration,bandwidth,f_0,f_1,f_2\n";
    const char* names[] = {"drive", "docs", "music", "search", "youtube"};
    for (int i = 0; i < 6439; ++i) text << names[i % 5] << ',' << i * 0.5 << ',' << i % 97 << ",1,2,3\n";
    const auto raw = parse(text.str());
    EXPECT_EQ(raw.dataset.size(), 6439u);
    EXPECT_EQ(raw.dataset.class_names.size(), 5u);
}

TEST(Flows, CsvRecordQuoting) {
    EXPECT_EQ(split_csv_record("a,\"b,c\",\"d\"\"e\""), (std::vector<std::string>{"a", "b,c", "d\"e"}));
    EXPECT_EQ(split_csv_record("a,,"), (std::vector<std::string>{"a", "", ""}));
}

TEST(QuantileBins, Examples) {
    const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
    const auto bins = QuantileBins::fit(v, 3);
    for (double x : {1.0, 2.0, 3.0}) EXPECT_EQ(bins.assign(x), 0);
    for (double x : {4.0, 5.0, 6.0}) EXPECT_EQ(bins.assign(x), 1);
    for (double x : {7.0, 8.0, 9.0}) EXPECT_EQ(bins.assign(x), 2);
    EXPECT_EQ(bins.assign(-100.0), 0);
    EXPECT_EQ(bins.assign(1e9), 2);
    const auto two = QuantileBins::fit(std::vector<double>{1, 2}, 2);
    EXPECT_EQ(two.assign(1.0), 0);
    EXPECT_EQ(two.assign(2.0), 1);
}

TEST(QuantileBins, DegenerateColumnsRejected) {
    EXPECT_THROW(QuantileBins::fit(std::vector<double>(10, 4.0), 3), ConfigError);
    EXPECT_THROW(QuantileBins::fit(std::vector<double>{1, 2, 3}, 1), ConfigError);
    EXPECT_THROW(QuantileBins::fit(std::vector<double>{1, 2}, 3), ConfigError);
}

TEST(QuantileBins, PopulationBalance) {
    Rng rng(5);
    std::lognormal_distribution<double> g(0.0, 1.5);
    for (std::size_t n : {30u, 301u, 1000u, 5795u}) {
        for (std::size_t k : {2u, 3u, 4u, 7u}) {
            std::vector<double> v(n);
            for (auto& x : v) x = g(rng);
            const auto bins = QuantileBins::fit(v, k);
            std::vector<std::size_t> pop(k, 0);
            for (double x : v) ++pop[static_cast<std::size_t>(bins.assign(x))];
            const auto [lo, hi] = std::minmax_element(pop.begin(), pop.end());
            const std::size_t allowed = (n + k - 1) / k - n / k;
            EXPECT_LE(*hi - *lo, allowed) << n << " values, " << k << " bins";
        }
    }
}

TEST(QuantileBins, TiedRunsGoToTheNearerSide) {
    // sorted 1,1,1,2,3,4,4,4,4,5,6,7: the run of 4s sits across the second
    // cut (rank 8) and is kept below it.
    const std::vector<double> v{1, 1, 1, 2, 3, 4, 5, 6, 7, 4, 4, 4};
    const auto bins = QuantileBins::fit(v, 3);
    EXPECT_EQ(bins.boundaries(), (std::vector<double>{3.0, 5.0}));
}

TEST(QuantileBins, BalanceWithTies) {
    Rng rng(17);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 20 + rng() % 500;
        const std::size_t k = 2 + rng() % 4;
        std::uniform_int_distribution<int> value(0, 30 + static_cast<int>(rng() % 200));
        std::vector<double> v(n);
        for (auto& x : v) x = value(rng);
        QuantileBins bins;
        try {
            bins = QuantileBins::fit(v, k);
        } catch (const ConfigError&) {
            continue;
        }
        std::map<double, std::size_t> mult;
        for (double x : v) ++mult[x];
        std::size_t tied = 0;
        for (const auto& [x, c] : mult)
            if (c > 1) tied += c;
        std::vector<std::size_t> pop(k, 0);
        for (double x : v) ++pop[static_cast<std::size_t>(bins.assign(x))];
        const auto [lo, hi] = std::minmax_element(pop.begin(), pop.end());
        EXPECT_LE(*hi - *lo, (n + k - 1) / k - n / k + tied);
        EXPECT_GT(*lo, 0u);
    }
}

TEST(QuantileBins, FitIgnoresLaterData) {
    Rng rng(1);
    std::normal_distribution<double> g;
    std::vector<double> train(500);
    for (auto& x : train) x = g(rng);
    const auto before = QuantileBins::fit(train, 3);
    const auto boundaries = before.boundaries();
    std::vector<double> test(100, 50.0);
    for (double x : test) (void)before.assign(x);
    EXPECT_EQ(before.boundaries(), boundaries);
}

TEST(Split, FlowCorpusSizes) {
    const double r[] = {0.9, 0.1};
    const auto parts = split_indices(6439, r, 1);
    EXPECT_EQ(parts[0].size(), 5795u);
    EXPECT_EQ(parts[1].size(), 644u);
    const auto ten = split_indices(10, r, 1);
    EXPECT_EQ(ten[0].size(), 9u);
    EXPECT_EQ(ten[1].size(), 1u);
}

TEST(Split, DeterministicAndDisjoint) {
    const auto a = make_split(1000, 0.1, 0.1, 42);
    const auto b = make_split(1000, 0.1, 0.1, 42);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.validation, b.validation);
    EXPECT_EQ(a.test, b.test);
    EXPECT_NE(make_split(1000, 0.1, 0.1, 43).test, a.test);
    EXPECT_EQ(a.test.size(), 100u);
    EXPECT_EQ(a.validation.size(), 90u);
    EXPECT_EQ(a.train.size(), 810u);
    std::set<std::size_t> all(a.train.begin(), a.train.end());
    all.insert(a.validation.begin(), a.validation.end());
    all.insert(a.test.begin(), a.test.end());
    EXPECT_EQ(all.size(), 1000u);
}

TEST(Split, BadRatios) {
    const double bad[] = {0.7, 0.2};
    EXPECT_THROW(split_indices(10, bad, 1), ConfigError);
    const double empty_part[] = {0.5, 0.0, 0.5};
    EXPECT_THROW(split_indices(10, empty_part, 1), ConfigError);
    EXPECT_THROW(make_split(10, 0.0, 0.1, 1), ConfigError);
}

TEST(Partition, DisjointCoverageOnRandomDraws) {
    Rng meta(2024);
    for (int draw = 0; draw < 100; ++draw) {
        const std::size_t n = 50 + meta() % 400;
        const std::size_t stations = 1 + meta() % 10;
        const auto mode = meta() % 2 ? PartitionMode::Iid : PartitionMode::Dirichlet;
        const double alpha = 0.05 + static_cast<double>(meta() % 100) / 50.0;
        std::vector<int> labels(n);
        for (auto& l : labels) l = static_cast<int>(meta() % 5);
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < n; ++i)
            if (meta() % 4) pool.push_back(i);
        if (pool.size() < stations) continue;
        const auto plan = partition(pool, labels, mode, alpha, stations, meta());
        ASSERT_EQ(plan.shards.size(), stations);
        std::vector<std::size_t> all;
        for (const auto& s : plan.shards) {
            ASSERT_FALSE(s.empty());
            ASSERT_TRUE(std::is_sorted(s.begin(), s.end()));
            all.insert(all.end(), s.begin(), s.end());
        }
        std::sort(all.begin(), all.end());
        ASSERT_EQ(all, pool) << "draw " << draw;
    }
}

TEST(Partition, IidRoundRobin) {
    std::vector<int> labels(600);
    for (std::size_t i = 0; i < 600; ++i) labels[i] = static_cast<int>(i % 5);
    const auto plan = partition(iota_pool(600), labels, PartitionMode::Iid, 0.5, 6, 3);
    for (const auto& s : plan.shards) EXPECT_EQ(s.size(), 100u);

    std::vector<int> ten{0, 0, 0, 0, 1, 1, 1, 2, 2, 2};
    const auto two = partition(iota_pool(10), ten, PartitionMode::Iid, 0.5, 2, 9);
    for (const auto& s : two.shards) {
        EXPECT_EQ(s.size(), 5u);
        for (int c = 0; c < 3; ++c) {
            const auto global = std::count(ten.begin(), ten.end(), c);
            const auto local = std::count_if(s.begin(), s.end(), [&](std::size_t i) { return ten[i] == c; });
            EXPECT_LE(std::abs(2 * local - global), 2) << "class " << c;
        }
    }
}

TEST(Partition, SingleStationAndErrors) {
    std::vector<int> labels{0, 1, 0, 1, 2};
    const std::vector<std::size_t> pool{0, 2, 3, 4};
    const auto plan = partition(pool, labels, PartitionMode::Dirichlet, 0.5, 1, 1);
    EXPECT_EQ(plan.shards[0], pool);
    EXPECT_THROW(partition(pool, labels, PartitionMode::Dirichlet, 0.5, 5, 1), ConfigError);
    EXPECT_THROW(partition(pool, labels, PartitionMode::Dirichlet, 0.0, 2, 1), ConfigError);
    EXPECT_EQ(parse_partition_mode(to_string(PartitionMode::Iid)), PartitionMode::Iid);
    EXPECT_THROW(parse_partition_mode("random"), ConfigError);
}

TEST(Partition, DirichletSkewsLabels) {
    std::vector<int> labels(3000);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 5);
    int skewed = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto plan = partition(iota_pool(3000), labels, PartitionMode::Dirichlet, 0.1, 6, seed);
        bool any = false;
        for (const auto& s : plan.shards) {
            std::vector<double> count(5, 0.0);
            for (auto i : s) count[static_cast<std::size_t>(labels[i])] += 1.0;
            const double top = *std::max_element(count.begin(), count.end());
            if (top / static_cast<double>(s.size()) >= 2.0 * 0.2) any = true;
        }
        skewed += any;
    }
    EXPECT_EQ(skewed, 20);
}

TEST(Partition, SameSeedSamePlan) {
    std::vector<int> labels(500);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>((i * 7) % 5);
    const auto a = partition(iota_pool(500), labels, PartitionMode::Dirichlet, 0.5, 6, 77);
    const auto b = partition(iota_pool(500), labels, PartitionMode::Dirichlet, 0.5, 6, 77);
    EXPECT_EQ(a.shards, b.shards);
}

TEST(Synth, ShapesAndDeterminism) {
    SynthSpec spec;
    spec.samples = 600;
    const auto a = synth_generate(spec, 4);
    const auto b = synth_generate(spec, 4);
    ASSERT_EQ(a.size(), 600u);
    EXPECT_EQ(a.class_names.size(), 5u);
    EXPECT_EQ(a.aux_ids, (std::vector<std::string>{"duration", "bandwidth"}));
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.samples[i].features, b.samples[i].features);
        EXPECT_EQ(a.samples[i].aux_labels, b.samples[i].aux_labels);
        ASSERT_EQ(a.samples[i].features.size(), spec.feature_length);
        ASSERT_GE(a.samples[i].main_label, 0);
        ASSERT_LT(a.samples[i].main_label, 5);
        for (std::size_t j = 0; j < 2; ++j) {
            ASSERT_GE(a.samples[i].aux_labels[j], 0);
            ASSERT_LT(a.samples[i].aux_labels[j], 3);
        }
    }
    EXPECT_NE(synth_generate(spec, 5).samples[0].features, a.samples[0].features);
}

TEST(Synth, NoiselessClassesAreSeparable) {
    SynthSpec spec;
    spec.samples = 500;
    spec.noise = 0.0;
    const auto ds = synth_generate(spec, 8);
    // nearest class mean, means estimated from the data itself
    std::vector<std::vector<double>> mean(5, std::vector<double>(spec.feature_length, 0.0));
    std::vector<double> count(5, 0.0);
    for (const auto& s : ds.samples) {
        count[static_cast<std::size_t>(s.main_label)] += 1.0;
        for (std::size_t k = 0; k < spec.feature_length; ++k) mean[static_cast<std::size_t>(s.main_label)][k] += s.features[k];
    }
    for (std::size_t c = 0; c < 5; ++c)
        for (auto& v : mean[c]) v /= count[c];
    std::size_t correct = 0;
    for (const auto& s : ds.samples) {
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t c = 0; c < 5; ++c) {
            double d = 0.0;
            for (std::size_t k = 0; k < spec.feature_length; ++k) d += std::pow(s.features[k] - mean[c][k], 2);
            if (d < best_d) best_d = d, best = c;
        }
        correct += best == static_cast<std::size_t>(s.main_label);
    }
    EXPECT_EQ(correct, ds.size());
}

TEST(Synth, AuxLabelsCarryMainInformation) {
    SynthSpec spec;
    spec.samples = 5000;
    const auto ds = synth_generate(spec, 11);
    const auto main = ds.main_labels();
    Rng rng(3);
    for (std::size_t j = 0; j < 2; ++j) {
        std::vector<int> aux;
        for (const auto& s : ds.samples) aux.push_back(s.aux_labels[j]);
        const double mi = mutual_information(main, aux);
        double shuffled_max = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            auto perm = aux;
            std::shuffle(perm.begin(), perm.end(), rng);
            shuffled_max = std::max(shuffled_max, mutual_information(main, perm));
        }
        EXPECT_GT(mi, shuffled_max) << "aux " << j;
    }
}
