#include "fedaux/loss.hpp"

#include <algorithm>
#include <cmath>

#include "fedaux/errors.hpp"

namespace fedaux::nn {

namespace {

void check_inputs(const Tensor& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw InternalError("logits must be [batch, classes], got " + shape_to_string(logits.shape()));
    if (logits.dim(1) < 2) throw ConfigError("cross-entropy needs at least 2 classes");
    if (labels.size() != logits.dim(0))
        throw DataError("label count " + std::to_string(labels.size()) + " does not match batch " +
                        std::to_string(logits.dim(0)));
    const auto k = static_cast<int>(logits.dim(1));
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] < 0 || labels[r] >= k)
            throw DataError("row " + std::to_string(r) + ": label " + std::to_string(labels[r]) +
                            " outside [0," + std::to_string(k) + ")");
    }
}

// log(sum(exp(row))) with the row maximum factored out.
double log_sum_exp(const double* row, std::size_t k, double row_max) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(row[j] - row_max);
    return row_max + std::log(sum);
}

}  // namespace

CrossEntropyResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    check_inputs(logits, labels);
    const std::size_t batch = logits.dim(0);
    const std::size_t k = logits.dim(1);
    const double inv_batch = 1.0 / static_cast<double>(batch);
    CrossEntropyResult res{0.0, Tensor(logits.shape())};
    double total = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
        const double* row = logits.data() + r * k;
        double* grow = res.dlogits.data() + r * k;
        const double row_max = *std::max_element(row, row + k);
        const double lse = log_sum_exp(row, k, row_max);
        total += lse - row[labels[r]];
        for (std::size_t j = 0; j < k; ++j) grow[j] = std::exp(row[j] - lse) * inv_batch;
        grow[labels[r]] -= inv_batch;
    }
    res.loss = total * inv_batch;
    return res;
}

double cross_entropy_loss(const Tensor& logits, std::span<const int> labels) {
    check_inputs(logits, labels);
    const std::size_t batch = logits.dim(0);
    const std::size_t k = logits.dim(1);
    double total = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
        const double* row = logits.data() + r * k;
        const double row_max = *std::max_element(row, row + k);
        total += log_sum_exp(row, k, row_max) - row[labels[r]];
    }
    return total / static_cast<double>(batch);
}

std::vector<int> argmax_rows(const Tensor& logits) {
    const std::size_t batch = logits.dim(0);
    const std::size_t k = logits.dim(1);
    std::vector<int> out(batch);
    for (std::size_t r = 0; r < batch; ++r) {
        const double* row = logits.data() + r * k;
        out[r] = static_cast<int>(std::max_element(row, row + k) - row);
    }
    return out;
}

std::vector<double> softmax(std::span<const double> z) {
    std::vector<double> out(z.size());
    if (z.empty()) return out;
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) sum += out[i] = std::exp(z[i] - m);
    for (double& v : out) v /= sum;
    return out;
}

}  // namespace fedaux::nn
