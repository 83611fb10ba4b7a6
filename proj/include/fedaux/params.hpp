#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace fedaux::nn {

/// Flat vector of every trainable parameter of a model; fixed length after
/// construction. Canonical order: trunk layers ascending, then each task
/// head in declared task order; within a layer, weights (row-major
/// [out][in] or [out][in][kernel]) precede biases.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::size_t length) : values_(length, 0.0) {}
    explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

    std::size_t size() const noexcept { return values_.size(); }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    /// Overwrite from another vector of identical length.
    void assign(std::span<const double> src);

    friend bool operator==(const ParamVector&, const ParamVector&) = default;

private:
    std::vector<double> values_;
};

/// In-place SGD update: params[i] -= eta * grads[i].
void sgd_step(ParamVector& params, std::span<const double> grads, double eta);

/// Checkpoint: u64 little-endian length followed by little-endian float32 values.
void save_params(const std::filesystem::path& path, const ParamVector& params);
ParamVector load_params(const std::filesystem::path& path);

}  // namespace fedaux::nn
