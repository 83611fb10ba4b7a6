#include <gtest/gtest.h>

#include "fedaux/architecture.hpp"
#include "fedaux/errors.hpp"
#include "fedaux/loss.hpp"
#include "fedaux/mtl_model.hpp"
#include "fedaux/weighting.hpp"
#include "support/oracles.hpp"

using namespace fedaux;
using namespace fedaux::mtl;

namespace {

std::vector<TaskSpec> three_tasks() {
    return {{"service", TaskRole::Main, 3}, {"duration", TaskRole::Auxiliary, 2}, {"bandwidth", TaskRole::Auxiliary, 3}};
}

HardSharedModel tiny_model(const std::vector<TaskSpec>& tasks = three_tasks()) {
    ArchitectureSpec arch;
    arch.input_shape = {1, 8};
    arch.trunk = {{"conv1d", 2, 3}, {"relu"}, {"maxpool1d", 0, 0, 1, 2}, {"flatten"}, {"dense", 0, 0, 1, 0, 4}, {"relu"}};
    arch.head_hidden = {{"dense", 0, 0, 1, 0, 3}, {"relu"}};
    return build_model(arch, tasks);
}

LabeledSet random_set(Rng& rng, std::size_t n, std::size_t f, const std::vector<TaskSpec>& tasks) {
    LabeledSet s;
    s.feature_length = f;
    std::normal_distribution<double> g;
    for (std::size_t i = 0; i < n * f; ++i) s.features.push_back(g(rng));
    for (const auto& t : tasks) {
        std::uniform_int_distribution<int> lab(0, t.num_classes - 1);
        std::vector<int> col(n);
        for (auto& c : col) c = lab(rng);
        s.labels.push_back(col);
    }
    return s;
}

std::vector<double> perturbed_init(const HardSharedModel& m, Rng& rng) {
    auto p = m.init_params(rng);
    std::normal_distribution<double> g(0.0, 0.2);
    for (auto& v : p.values()) v += g(rng);
    return {p.values().begin(), p.values().end()};
}

double loss_at(const HardSharedModel& m, const std::vector<double>& p, const nn::Tensor& x,
               const std::vector<std::vector<int>>& labels, const std::vector<double>& tau, LossMode mode) {
    const auto fwd = m.forward(p, x);
    std::vector<double> losses;
    for (std::size_t t = 0; t < m.task_count(); ++t)
        losses.push_back(oracle::cross_entropy({fwd.logits[t].values().begin(), fwd.logits[t].values().end()},
                                               static_cast<std::size_t>(m.tasks()[t].num_classes), labels[t]));
    return composite_loss(m.tasks(), losses, tau, mode);
}

}  // namespace

TEST(Rlw, ForcedLogitsExamples) {
    const auto a = nn::softmax(std::vector<double>{0.0, 0.0});
    EXPECT_DOUBLE_EQ(a[0], 0.5);
    const auto b = nn::softmax(std::vector<double>{std::log(3.0), 0.0});
    EXPECT_NEAR(b[0], 0.75, 1e-15);
    EXPECT_NEAR(b[1], 0.25, 1e-15);
    const auto c = nn::softmax(std::vector<double>{0.0, 0.0, 0.0});
    for (double v : c) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Rlw, SimplexAndSymmetry) {
    for (std::size_t n : {2u, 3u, 5u}) {
        Rng rng(100 + n);
        std::vector<double> mean(n, 0.0);
        for (int s = 0; s < 10000; ++s) {
            const auto tau = sample_rlw(rng, n);
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                ASSERT_GT(tau[i], 0.0);
                sum += tau[i];
                mean[i] += tau[i] / 10000.0;
            }
            ASSERT_NEAR(sum, 1.0, 1e-12);
        }
        for (double m : mean) EXPECT_NEAR(m, 1.0 / static_cast<double>(n), 0.01);
    }
}

TEST(Rlw, SingleTaskScopeIsOne) {
    Rng rng(1);
    EXPECT_EQ(sample_rlw(rng, 1), std::vector<double>{1.0});
}

TEST(Weighting, EqualAndNames) {
    EXPECT_EQ(equal_weights(4), std::vector<double>(4, 0.25));
    Rng rng(1);
    EXPECT_EQ(draw_weights({WeightingKind::Equal, LossMode::Joint, ResampleGranularity::PerBatch}, rng, 3),
              equal_weights(3));
    EXPECT_EQ(parse_granularity("epoch"), ResampleGranularity::PerEpoch);
    EXPECT_EQ(to_string(ResampleGranularity::PerRound), "round");
    EXPECT_THROW(parse_granularity("often"), ConfigError);
}

TEST(CompositeLoss, Examples) {
    const auto tasks = three_tasks();
    EXPECT_NEAR(composite_loss(tasks, std::vector<double>{0.9, 0.6, 0.3}, std::vector<double>{0.5, 0.5},
                               LossMode::Auxiliary),
                1.35, 1e-15);
    EXPECT_EQ(composite_loss(tasks, std::vector<double>{0.9, 0.6, 0.3}, std::vector<double>{0.0, 0.0},
                             LossMode::Auxiliary),
              0.9);
    EXPECT_NEAR(composite_loss(tasks, std::vector<double>{3.0, 3.0, 3.0}, equal_weights(3), LossMode::Joint), 3.0,
                1e-15);
    EXPECT_THROW((void)composite_loss(tasks, std::vector<double>{1.0, 1.0}, equal_weights(2), LossMode::Auxiliary),
                 ConfigError);
    std::vector<TaskSpec> no_main{{"a", TaskRole::Auxiliary, 2}, {"b", TaskRole::Auxiliary, 2}};
    EXPECT_THROW((void)effective_task_weights(no_main, LossMode::Auxiliary, equal_weights(2)), ConfigError);
}

TEST(CompositeLoss, AtLeastMainLoss) {
    Rng rng(5);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> losses{u(rng), u(rng), u(rng)};
        const auto tau = sample_rlw(rng, 2);
        EXPECT_GE(composite_loss(three_tasks(), losses, tau, LossMode::Auxiliary), losses[0]);
    }
}

TEST(HardSharedModel, RejectsBadTaskLists) {
    auto tasks = three_tasks();
    tasks[1].role = TaskRole::Main;
    EXPECT_THROW(tiny_model(tasks), ConfigError);
    tasks = three_tasks();
    tasks[0].role = TaskRole::Auxiliary;
    EXPECT_THROW(tiny_model(tasks), ConfigError);
}

TEST(HardSharedModel, ForwardShapesAndPurity) {
    const auto m = tiny_model();
    Rng rng(1);
    const auto p = perturbed_init(m, rng);
    const auto data = random_set(rng, 4, 8, m.tasks());
    const std::vector<std::size_t> rows{0, 1, 2, 3};
    const auto x = gather_batch(data, rows, m.trunk().input_shape());
    const auto a = m.forward(p, x);
    const auto b = m.forward(p, x);
    ASSERT_EQ(a.logits.size(), 3u);
    for (std::size_t t = 0; t < 3; ++t) {
        EXPECT_EQ(a.logits[t].shape(), (nn::Shape{4, static_cast<std::size_t>(m.tasks()[t].num_classes)}));
        EXPECT_EQ(a.logits[t], b.logits[t]);
    }
    EXPECT_THROW((void)m.forward(p, nn::Tensor({2, 1, 7}, 0.0)), std::exception);
}

TEST(HardSharedModel, KnownWeightsGiveHandComputedLogits) {
    nn::LayerStack trunk({2}, {nn::Dense{2, 2}});
    std::vector<nn::LayerStack> heads{nn::LayerStack({2}, {nn::Dense{2, 2}}), nn::LayerStack({2}, {nn::Dense{2, 3}})};
    HardSharedModel m(trunk, {{"a", TaskRole::Main, 2}, {"b", TaskRole::Auxiliary, 3}}, heads);
    ASSERT_EQ(m.param_count(), 6u + 6u + 9u);
    // trunk = identity, head a = swap + bias, head b = rows (1,0),(0,1),(1,1)
    const std::vector<double> p{1, 0, 0, 1, 0, 0, 0, 1, 1, 0, 0.5, -0.5, 1, 0, 0, 1, 1, 1, 0, 0, 0};
    const auto fwd = m.forward(p, nn::Tensor({1, 2}, {2.0, 3.0}));
    EXPECT_EQ(fwd.logits[0].values()[0], 3.5);
    EXPECT_EQ(fwd.logits[0].values()[1], 1.5);
    EXPECT_EQ(fwd.logits[1].values()[0], 2.0);
    EXPECT_EQ(fwd.logits[1].values()[1], 3.0);
    EXPECT_EQ(fwd.logits[1].values()[2], 5.0);
    EXPECT_EQ(m.head_offset(0), 6u);
    EXPECT_EQ(m.head_offset(1), 12u);
}

class CompositeGradient : public ::testing::TestWithParam<int> {};

TEST_P(CompositeGradient, MatchesFiniteDifferences) {
    const auto m = tiny_model();
    ASSERT_LE(m.param_count(), 2000u);
    Rng rng(static_cast<std::uint64_t>(GetParam()));
    const auto p = perturbed_init(m, rng);
    const auto data = random_set(rng, 5, 8, m.tasks());
    const std::vector<std::size_t> rows{0, 1, 2, 3, 4};
    const auto x = gather_batch(data, rows, m.trunk().input_shape());
    const auto labels = gather_labels(data, rows);
    for (auto mode : {LossMode::Auxiliary, LossMode::Joint}) {
        const auto tau = sample_rlw(rng, mode == LossMode::Joint ? 3 : 2);
        const auto g = mtl_backward(m, p, m.forward(p, x), labels, tau, mode);
        const auto num = oracle::numeric_gradient(
            [&](const std::vector<double>& v) { return loss_at(m, v, x, labels, tau, mode); }, p);
        EXPECT_LT(oracle::relative_error(g.grad, num), 1e-5) << to_string(mode);
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, CompositeGradient, ::testing::Range(1, 11));

TEST(MtlBackward, LinearInTaskWeightsAndHeadsIsolated) {
    const auto m = tiny_model();
    Rng rng(12);
    const auto p = perturbed_init(m, rng);
    const auto data = random_set(rng, 6, 8, m.tasks());
    const std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};
    const auto fwd = m.forward(p, gather_batch(data, rows, m.trunk().input_shape()));
    const auto labels = gather_labels(data, rows);
    std::vector<std::vector<double>> single;
    for (std::size_t t = 0; t < 3; ++t) {
        std::vector<double> w(3, 0.0);
        w[t] = 1.0;
        single.push_back(m.backward(p, fwd, labels, w).grad);
        for (std::size_t o = 0; o < 3; ++o) {
            if (o == t) continue;
            const auto begin = m.head_offset(o);
            const auto end = begin + m.heads()[o].param_count();
            for (auto i = begin; i < end; ++i) ASSERT_EQ(single[t][i], 0.0);
        }
    }
    const std::vector<double> w{0.7, 0.2, 1.3};
    const auto mixed = m.backward(p, fwd, labels, w).grad;
    for (std::size_t i = 0; i < mixed.size(); ++i)
        EXPECT_NEAR(mixed[i], w[0] * single[0][i] + w[1] * single[1][i] + w[2] * single[2][i], 1e-12);

    const auto main_only = mtl_backward(m, p, fwd, labels, std::vector<double>{0.0, 0.0}, LossMode::Auxiliary);
    EXPECT_EQ(main_only.grad, single[0]);
}

TEST(MtlBackward, UnequalLabelColumnsRejected) {
    const auto m = tiny_model();
    Rng rng(1);
    const auto p = perturbed_init(m, rng);
    const auto fwd = m.forward(p, nn::Tensor({2, 1, 8}, 0.1));
    std::vector<std::vector<int>> labels{{0, 1}, {0}, {1, 2}};
    EXPECT_THROW((void)m.backward(p, fwd, labels, std::vector<double>{1, 1, 1}), DataError);
}

TEST(LocalTrain, ZeroLearningRateKeepsParams) {
    const auto m = tiny_model();
    Rng rng(3);
    const auto start = m.init_params(rng);
    const auto data = random_set(rng, 10, 8, m.tasks());
    LocalTrainConfig cfg{0.0, 16, 1, {}};
    const auto res = local_train(m, start, data, cfg, rng);
    EXPECT_EQ(res.params, start);
    EXPECT_EQ(res.iterations, 1u);
}

TEST(LocalTrain, OneSampleOneStepMatchesHandSgd) {
    nn::LayerStack trunk({2}, {nn::Dense{2, 2}});
    HardSharedModel m(trunk, {{"a", TaskRole::Main, 2}}, {nn::LayerStack({2}, {nn::Dense{2, 2}})});
    LabeledSet s;
    s.feature_length = 2;
    s.features = {0.4, -1.1};
    s.labels = {{1}};
    Rng rng(8);
    const auto start = m.init_params(rng);
    const std::vector<double> p0(start.values().begin(), start.values().end());
    const auto grad = oracle::numeric_gradient(
        [&](const std::vector<double>& v) {
            const auto fwd = m.forward(v, nn::Tensor({1, 2}, s.features));
            return oracle::cross_entropy({fwd.logits[0].values().begin(), fwd.logits[0].values().end()}, 2, {1});
        },
        p0);
    const double eta = 0.3;
    const auto res = local_train(m, start, s, {eta, 1, 1, {WeightingKind::Equal, LossMode::Auxiliary, {}}}, rng);
    for (std::size_t i = 0; i < p0.size(); ++i) EXPECT_NEAR(res.params[i], p0[i] - eta * grad[i], 1e-9);
}

TEST(LocalTrain, DeterministicAndCountsIterations) {
    const auto m = tiny_model();
    Rng init(3);
    const auto start = m.init_params(init);
    Rng data_rng(4);
    const auto data = random_set(data_rng, 37, 8, m.tasks());
    LocalTrainConfig cfg{0.05, 8, 3, {}};
    Rng a(11), b(11);
    const auto ra = local_train(m, start, data, cfg, a);
    const auto rb = local_train(m, start, data, cfg, b);
    EXPECT_EQ(ra.params, rb.params);
    EXPECT_EQ(ra.epoch_task_losses, rb.epoch_task_losses);
    EXPECT_EQ(ra.iterations, 3u * 5u);
    EXPECT_EQ(ra.epoch_task_losses.size(), 3u);
    LabeledSet empty;
    empty.feature_length = 8;
    empty.labels.assign(3, {});
    EXPECT_THROW((void)local_train(m, start, empty, cfg, a), ConfigError);
}

TEST(LocalTrain, DivergenceRaisesNumericalError) {
    const auto m = tiny_model();
    Rng rng(3);
    auto start = m.init_params(rng);
    start[0] = std::numeric_limits<double>::quiet_NaN();
    const auto data = random_set(rng, 8, 8, m.tasks());
    EXPECT_THROW((void)local_train(m, start, data, {0.1, 4, 1, {}}, rng), NumericalError);
}

TEST(Evaluate, AccuracyAndLoss) {
    nn::LayerStack trunk({2}, {nn::Dense{2, 2}});
    HardSharedModel m(trunk, {{"a", TaskRole::Main, 2}}, {nn::LayerStack({2}, {nn::Dense{2, 2}})});
    const std::vector<double> p{1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0};
    LabeledSet s;
    s.feature_length = 2;
    s.features = {1.0, 0.0, 0.0, 1.0, 2.0, 0.0};
    s.labels = {{0, 1, 1}};
    const auto ev = evaluate(m, p, s);
    EXPECT_DOUBLE_EQ(ev[0].accuracy, 2.0 / 3.0);
    EXPECT_NEAR(ev[0].loss, oracle::cross_entropy(s.features, 2, {0, 1, 1}), 1e-12);
}

TEST(Architecture, DefaultModelBuildsForFeatureLengths) {
    for (std::size_t f : {16u, 32u, 100u}) {
        const auto m = build_model(default_architecture(f), three_tasks());
        EXPECT_EQ(m.trunk().input_shape(), (nn::Shape{1, f}));
        EXPECT_EQ(m.heads().size(), 3u);
    }
    ArchitectureSpec bad;
    bad.input_shape = {1, 8};
    bad.trunk = {{"lstm"}};
    EXPECT_THROW(build_model(bad, three_tasks()), ConfigError);
}
