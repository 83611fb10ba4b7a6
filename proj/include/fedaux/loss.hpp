#pragma once

#include <span>
#include <vector>

#include "fedaux/tensor.hpp"

namespace fedaux::nn {

struct CrossEntropyResult {
    double loss = 0.0;  // batch mean
    Tensor dlogits;     // (softmax - onehot) / batch
};

/// Softmax cross-entropy over logits [batch, K] using the max-shifted
/// log-sum-exp. Throws DataError naming the row of an out-of-range label.
CrossEntropyResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Loss only; no gradient tensor is allocated.
double cross_entropy_loss(const Tensor& logits, std::span<const int> labels);

/// Row-wise argmax of logits [batch, K]; ties resolve to the lowest index.
std::vector<int> argmax_rows(const Tensor& logits);

/// Numerically stable softmax of a single vector.
std::vector<double> softmax(std::span<const double> z);

}  // namespace fedaux::nn
