#include "fedaux/mtl_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fedaux/errors.hpp"
#include "fedaux/loss.hpp"

namespace fedaux::mtl {

HardSharedModel::HardSharedModel(nn::LayerStack trunk, std::vector<TaskSpec> tasks, std::vector<nn::LayerStack> heads)
    : trunk_(std::move(trunk)), tasks_(std::move(tasks)), heads_(std::move(heads)) {
    if (tasks_.empty()) throw ConfigError("model needs at least one task");
    if (heads_.size() != tasks_.size())
        throw ConfigError("model declares " + std::to_string(tasks_.size()) + " tasks but " +
                          std::to_string(heads_.size()) + " heads");
    std::set<std::string> ids;
    std::size_t mains = 0;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        const auto& t = tasks_[i];
        if (!ids.insert(t.id).second) throw ConfigError("duplicate task id '" + t.id + "'");
        if (t.num_classes < 2) throw ConfigError("task '" + t.id + "' needs num_classes >= 2");
        if (t.role == TaskRole::Main) {
            ++mains;
            main_index_ = i;
        }
        if (heads_[i].input_shape() != trunk_.output_shape())
            throw ConfigError("head '" + t.id + "' input " + nn::shape_to_string(heads_[i].input_shape()) +
                              " does not match trunk output " + nn::shape_to_string(trunk_.output_shape()));
        if (heads_[i].output_shape() != nn::Shape{static_cast<std::size_t>(t.num_classes)})
            throw ConfigError("head '" + t.id + "' must end in " + std::to_string(t.num_classes) + " logits");
    }
    if (mains != 1) throw ConfigError("exactly one main task required, found " + std::to_string(mains));

    param_count_ = trunk_.param_count();
    for (const auto& h : heads_) {
        head_offsets_.push_back(param_count_);
        param_count_ += h.param_count();
    }
}

nn::ParamVector HardSharedModel::init_params(Rng& rng) const {
    std::vector<double> p = trunk_.init_params(rng);
    p.reserve(param_count_);
    for (const auto& h : heads_) {
        auto hp = h.init_params(rng);
        p.insert(p.end(), hp.begin(), hp.end());
    }
    return nn::ParamVector(std::move(p));
}

MtlForward HardSharedModel::forward(std::span<const double> params, const nn::Tensor& x) const {
    if (params.size() != param_count_)
        throw InternalError("model expects " + std::to_string(param_count_) + " params, got " +
                            std::to_string(params.size()));
    MtlForward out;
    auto trunk_res = trunk_.forward(params.first(trunk_.param_count()), x);
    out.trunk_cache = std::move(trunk_res.cache);
    out.logits.reserve(heads_.size());
    out.head_caches.reserve(heads_.size());
    for (std::size_t i = 0; i < heads_.size(); ++i) {
        auto head_res = heads_[i].forward(params.subspan(head_offsets_[i], heads_[i].param_count()), trunk_res.output);
        out.logits.push_back(std::move(head_res.output));
        out.head_caches.push_back(std::move(head_res.cache));
    }
    return out;
}

std::vector<double> HardSharedModel::backward_into(std::span<const double> params, const MtlForward& fwd,
                                                   std::span<const std::vector<int>> labels,
                                                   std::span<const double> task_weights,
                                                   std::span<double> grad) const {
    if (labels.size() != tasks_.size() || task_weights.size() != tasks_.size() || fwd.logits.size() != tasks_.size())
        throw InternalError("backward: per-task inputs do not match the model's task count");
    if (grad.size() != param_count_) throw InternalError("backward: gradient buffer has wrong length");
    for (const auto& l : labels) {
        if (l.size() != labels.front().size())
            throw DataError("label arrays have unequal batch sizes (" + std::to_string(l.size()) + " vs " +
                            std::to_string(labels.front().size()) + ")");
    }
    std::fill(grad.begin(), grad.end(), 0.0);

    std::vector<double> losses(tasks_.size(), 0.0);
    nn::Tensor trunk_dy;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        auto ce = nn::softmax_cross_entropy(fwd.logits[i], labels[i]);
        losses[i] = ce.loss;
        const double w = task_weights[i];
        if (w == 0.0) continue;
        if (w != 1.0)
            for (double& v : ce.dlogits.values()) v *= w;
        const auto n = heads_[i].param_count();
        nn::Tensor dfeat = heads_[i].backward(params.subspan(head_offsets_[i], n), fwd.head_caches[i], ce.dlogits,
                                              grad.subspan(head_offsets_[i], n));
        if (trunk_dy.size() == 0) {
            trunk_dy = std::move(dfeat);
        } else {
            for (std::size_t k = 0; k < trunk_dy.size(); ++k) trunk_dy[k] += dfeat[k];
        }
    }
    if (trunk_dy.size() != 0) {
        const auto n = trunk_.param_count();
        trunk_.backward(params.first(n), fwd.trunk_cache, trunk_dy, grad.first(n));
    }
    return losses;
}

MtlGradient HardSharedModel::backward(std::span<const double> params, const MtlForward& fwd,
                                      std::span<const std::vector<int>> labels,
                                      std::span<const double> task_weights) const {
    MtlGradient out;
    out.grad.assign(param_count_, 0.0);
    out.task_losses = backward_into(params, fwd, labels, task_weights, out.grad);
    return out;
}

std::vector<double> effective_task_weights(std::span<const TaskSpec> tasks, LossMode mode, std::span<const double> tau) {
    std::vector<double> w(tasks.size(), 0.0);
    if (mode == LossMode::Joint) {
        if (tau.size() != tasks.size())
            throw ConfigError("joint weighting needs " + std::to_string(tasks.size()) + " weights, got " +
                              std::to_string(tau.size()));
        std::copy(tau.begin(), tau.end(), w.begin());
        return w;
    }
    std::size_t b = 0;
    bool has_main = false;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].role == TaskRole::Main) {
            w[i] = 1.0;
            has_main = true;
        } else {
            if (b >= tau.size()) throw ConfigError("too few auxiliary weights");
            w[i] = tau[b++];
        }
    }
    if (!has_main) throw ConfigError("auxiliary weighting requires a main task");
    if (b != tau.size())
        throw ConfigError("auxiliary weighting got " + std::to_string(tau.size()) + " weights for " +
                          std::to_string(b) + " auxiliary tasks");
    return w;
}

double composite_loss(std::span<const TaskSpec> tasks, std::span<const double> task_losses, std::span<const double> tau,
                      LossMode mode) {
    if (task_losses.size() != tasks.size())
        throw ConfigError("composite loss: " + std::to_string(task_losses.size()) + " losses for " +
                          std::to_string(tasks.size()) + " tasks");
    const auto w = effective_task_weights(tasks, mode, tau);
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) total += w[i] * task_losses[i];
    return total;
}

MtlGradient mtl_backward(const HardSharedModel& model, std::span<const double> params, const MtlForward& fwd,
                         std::span<const std::vector<int>> labels, std::span<const double> tau, LossMode mode) {
    const auto w = effective_task_weights(model.tasks(), mode, tau);
    return model.backward(params, fwd, labels, w);
}

nn::Tensor gather_batch(const LabeledSet& data, std::span<const std::size_t> rows, const nn::Shape& input_shape) {
    const std::size_t f = data.feature_length;
    if (nn::shape_size(input_shape) != f)
        throw ConfigError("model input " + nn::shape_to_string(input_shape) + " does not hold " + std::to_string(f) +
                          " features");
    nn::Shape shape{rows.size()};
    shape.insert(shape.end(), input_shape.begin(), input_shape.end());
    nn::Tensor x(std::move(shape));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double* src = data.features.data() + rows[r] * f;
        std::copy(src, src + f, x.data() + r * f);
    }
    return x;
}

std::vector<std::vector<int>> gather_labels(const LabeledSet& data, std::span<const std::size_t> rows) {
    std::vector<std::vector<int>> out(data.labels.size(), std::vector<int>(rows.size()));
    for (std::size_t t = 0; t < data.labels.size(); ++t)
        for (std::size_t r = 0; r < rows.size(); ++r) out[t][r] = data.labels[t][rows[r]];
    return out;
}

LocalTrainResult local_train(const HardSharedModel& model, const nn::ParamVector& start, const LabeledSet& shard,
                             const LocalTrainConfig& cfg, Rng& rng) {
    const std::size_t n = shard.size();
    if (n == 0) throw ConfigError("local training on an empty shard");
    if (cfg.batch_size == 0) throw ConfigError("batch size must be >= 1");
    if (cfg.epochs == 0) throw ConfigError("local epochs must be >= 1");
    if (shard.labels.size() != model.task_count())
        throw ConfigError("shard carries " + std::to_string(shard.labels.size()) + " label columns, model has " +
                          std::to_string(model.task_count()) + " tasks");

    const auto& strategy = cfg.strategy;
    const std::size_t scope = strategy.mode == LossMode::Joint ? model.task_count() : model.aux_task_count();

    LocalTrainResult res;
    res.params = start;
    std::vector<double> grad(model.param_count(), 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<double> tau;
    if (strategy.granularity == ResampleGranularity::PerRound || strategy.kind == WeightingKind::Equal)
        tau = draw_weights(strategy, rng, scope);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        if (strategy.kind == WeightingKind::Random && strategy.granularity == ResampleGranularity::PerEpoch)
            tau = draw_weights(strategy, rng, scope);
        std::vector<double> loss_sum(model.task_count(), 0.0);
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
            const std::size_t end = std::min(n, begin + cfg.batch_size);
            const std::span<const std::size_t> rows(order.data() + begin, end - begin);
            if (strategy.kind == WeightingKind::Random && strategy.granularity == ResampleGranularity::PerBatch)
                tau = draw_weights(strategy, rng, scope);

            const nn::Tensor x = gather_batch(shard, rows, model.trunk().input_shape());
            const auto labels = gather_labels(shard, rows);
            const auto fwd = model.forward(res.params.values(), x);
            const auto weights = effective_task_weights(model.tasks(), strategy.mode, tau);
            const auto losses = model.backward_into(res.params.values(), fwd, labels, weights, grad);
            for (std::size_t t = 0; t < losses.size(); ++t) {
                if (!std::isfinite(losses[t]))
                    throw NumericalError("non-finite loss on task '" + model.tasks()[t].id + "' in epoch " +
                                             std::to_string(epoch + 1),
                                         -1, -1);
                loss_sum[t] += losses[t] * static_cast<double>(rows.size());
            }
            nn::sgd_step(res.params, grad, cfg.eta);
            ++res.iterations;
        }
        // ReLU maps NaN to 0, so a diverged weight can hide behind a finite loss.
        if (!std::all_of(res.params.values().begin(), res.params.values().end(),
                         [](double v) { return std::isfinite(v); }))
            throw NumericalError("non-finite parameters after epoch " + std::to_string(epoch + 1), -1, -1);
        for (double& v : loss_sum) v /= static_cast<double>(n);
        res.epoch_task_losses.push_back(std::move(loss_sum));
    }
    return res;
}

std::vector<TaskEvaluation> evaluate(const HardSharedModel& model, std::span<const double> params,
                                     const LabeledSet& data) {
    const std::size_t n = data.size();
    std::vector<TaskEvaluation> out(model.task_count());
    if (n == 0) throw ConfigError("evaluation on an empty dataset");
    constexpr std::size_t kChunk = 256;
    std::vector<std::size_t> correct(model.task_count(), 0);
    std::vector<double> loss_sum(model.task_count(), 0.0);
    std::vector<std::size_t> rows;
    for (std::size_t begin = 0; begin < n; begin += kChunk) {
        const std::size_t end = std::min(n, begin + kChunk);
        rows.resize(end - begin);
        std::iota(rows.begin(), rows.end(), begin);
        const auto fwd = model.forward(params, gather_batch(data, rows, model.trunk().input_shape()));
        const auto labels = gather_labels(data, rows);
        for (std::size_t t = 0; t < model.task_count(); ++t) {
            loss_sum[t] += nn::cross_entropy_loss(fwd.logits[t], labels[t]) * static_cast<double>(rows.size());
            const auto pred = nn::argmax_rows(fwd.logits[t]);
            for (std::size_t r = 0; r < rows.size(); ++r) correct[t] += pred[r] == labels[t][r] ? 1 : 0;
        }
    }
    for (std::size_t t = 0; t < out.size(); ++t) {
        out[t].accuracy = static_cast<double>(correct[t]) / static_cast<double>(n);
        out[t].loss = loss_sum[t] / static_cast<double>(n);
    }
    return out;
}

}  // namespace fedaux::mtl
