#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fedaux/layers.hpp"
#include "fedaux/params.hpp"
#include "fedaux/rng.hpp"
#include "fedaux/tensor.hpp"
#include "fedaux/weighting.hpp"

namespace fedaux::mtl {

enum class TaskRole { Main, Auxiliary };

struct TaskSpec {
    std::string id;
    TaskRole role = TaskRole::Main;
    int num_classes = 2;
    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// Features plus one label column per model task, in model task order.
struct LabeledSet {
    std::size_t feature_length = 0;
    std::vector<double> features;          // row-major [n, feature_length]
    std::vector<std::vector<int>> labels;  // [task][n]

    std::size_t size() const noexcept { return feature_length ? features.size() / feature_length : 0; }
};

struct MtlForward {
    std::vector<nn::Tensor> logits;  // one per task, declared order
    nn::ForwardCache trunk_cache;
    std::vector<nn::ForwardCache> head_caches;
};

struct MtlGradient {
    std::vector<double> grad;            // length param_count()
    std::vector<double> task_losses;     // batch-mean cross-entropy per task
};

/// Shared trunk followed by one head per task. The flat parameter vector
/// holds the trunk segment first, then each head in task order.
class HardSharedModel {
public:
    HardSharedModel(nn::LayerStack trunk, std::vector<TaskSpec> tasks, std::vector<nn::LayerStack> heads);

    const nn::LayerStack& trunk() const noexcept { return trunk_; }
    const std::vector<nn::LayerStack>& heads() const noexcept { return heads_; }
    const std::vector<TaskSpec>& tasks() const noexcept { return tasks_; }
    std::size_t task_count() const noexcept { return tasks_.size(); }
    std::size_t main_task_index() const noexcept { return main_index_; }
    std::size_t aux_task_count() const noexcept { return tasks_.size() - 1; }

    std::size_t param_count() const noexcept { return param_count_; }
    std::size_t head_offset(std::size_t task) const { return head_offsets_.at(task); }

    nn::ParamVector init_params(Rng& rng) const;

    /// Runs the trunk once and every head on the shared features.
    MtlForward forward(std::span<const double> params, const nn::Tensor& x) const;

    /// Back-propagates per-task cross-entropy scaled by `task_weights`
    /// (one per task). Heads with weight 0 are skipped, leaving their
    /// gradient segments exactly zero.
    MtlGradient backward(std::span<const double> params, const MtlForward& fwd,
                         std::span<const std::vector<int>> labels, std::span<const double> task_weights) const;

    /// Same as backward() but writes into a caller-owned buffer (zeroed here).
    std::vector<double> backward_into(std::span<const double> params, const MtlForward& fwd,
                                      std::span<const std::vector<int>> labels, std::span<const double> task_weights,
                                      std::span<double> grad) const;

private:
    nn::LayerStack trunk_;
    std::vector<TaskSpec> tasks_;
    std::vector<nn::LayerStack> heads_;
    std::vector<std::size_t> head_offsets_;
    std::size_t param_count_ = 0;
    std::size_t main_index_ = 0;
};

/// Per-task multipliers implied by (mode, tau). Auxiliary mode: main task
/// weight 1, tau indexed over auxiliary tasks in declared order. Joint
/// mode: tau indexed over all tasks.
std::vector<double> effective_task_weights(std::span<const TaskSpec> tasks, LossMode mode, std::span<const double> tau);

/// L_main + sum_b tau_b L_b (Auxiliary) or sum_i tau_i L_i (Joint).
double composite_loss(std::span<const TaskSpec> tasks, std::span<const double> task_losses,
                      std::span<const double> tau, LossMode mode);

/// mtl_backward over all tasks of `labels`, weights resolved from (mode, tau).
MtlGradient mtl_backward(const HardSharedModel& model, std::span<const double> params, const MtlForward& fwd,
                         std::span<const std::vector<int>> labels, std::span<const double> tau, LossMode mode);

/// Rows `rows` of `data` as a [batch]+input_shape tensor.
nn::Tensor gather_batch(const LabeledSet& data, std::span<const std::size_t> rows, const nn::Shape& input_shape);
std::vector<std::vector<int>> gather_labels(const LabeledSet& data, std::span<const std::size_t> rows);

struct LocalTrainConfig {
    double eta = 0.005;
    std::size_t batch_size = 32;
    std::size_t epochs = 20;
    WeightingStrategy strategy;
};

struct LocalTrainResult {
    nn::ParamVector params;
    std::vector<std::vector<double>> epoch_task_losses;  // [epoch][task], sample-weighted mean
    std::size_t iterations = 0;                           // SGD steps taken
};

/// Mini-batch SGD over the shard for `epochs` passes. The shard order is
/// reshuffled from `rng` each epoch; RLW weights are drawn from `rng` at the
/// configured granularity. Throws NumericalError (round/station -1) on a
/// non-finite batch loss.
LocalTrainResult local_train(const HardSharedModel& model, const nn::ParamVector& start, const LabeledSet& shard,
                             const LocalTrainConfig& cfg, Rng& rng);

struct TaskEvaluation {
    double accuracy = 0.0;
    double loss = 0.0;
    friend bool operator==(const TaskEvaluation&, const TaskEvaluation&) = default;
};

/// Argmax accuracy and mean cross-entropy per task.
std::vector<TaskEvaluation> evaluate(const HardSharedModel& model, std::span<const double> params,
                                     const LabeledSet& data);

}  // namespace fedaux::mtl
