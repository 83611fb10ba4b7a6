#include "fedaux/tensor.hpp"

#include <cmath>
#include <numeric>

#include "fedaux/errors.hpp"

namespace fedaux::nn {

std::size_t shape_size(const Shape& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_size(shape_) != values_.size()) {
        throw InternalError("tensor shape " + shape_to_string(shape_) + " does not match " +
                            std::to_string(values_.size()) + " values");
    }
}

Tensor Tensor::reshaped(Shape shape) const& {
    return Tensor(std::move(shape), values_);
}

Tensor Tensor::reshaped(Shape shape) && {
    return Tensor(std::move(shape), std::move(values_));
}

bool Tensor::all_finite() const noexcept {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace fedaux::nn
