#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedaux/rng.hpp"
#include "fedaux/tensor.hpp"

namespace fedaux::nn {

// Per-sample shapes exclude the batch axis: Conv1D and MaxPool1D see
// [channels, length], Dense sees [features].

struct Conv1D {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel_size = 1;
    std::size_t stride = 1;
    friend bool operator==(const Conv1D&, const Conv1D&) = default;
};

struct ReLU {
    friend bool operator==(const ReLU&, const ReLU&) = default;
};

struct MaxPool1D {
    std::size_t pool_size = 2;
    friend bool operator==(const MaxPool1D&, const MaxPool1D&) = default;
};

struct Flatten {
    friend bool operator==(const Flatten&, const Flatten&) = default;
};

struct Dense {
    std::size_t in_features = 1;
    std::size_t out_features = 1;
    friend bool operator==(const Dense&, const Dense&) = default;
};

using LayerSpec = std::variant<Conv1D, ReLU, MaxPool1D, Flatten, Dense>;

std::string layer_name(const LayerSpec& layer);
std::size_t layer_param_count(const LayerSpec& layer) noexcept;

/// Per-sample output shape of `layer` applied to `input`; throws ConfigError
/// naming `index` when the layer cannot consume that shape.
Shape layer_output_shape(const LayerSpec& layer, const Shape& input, std::size_t index);

/// Everything stack_backward needs from the forward pass.
struct ForwardCache {
    std::uint64_t stack_id = 0;
    std::vector<Tensor> inputs;                       // input of every layer
    std::vector<std::vector<std::size_t>> argmax;     // MaxPool1D winners, empty otherwise
    Shape output_shape;
};

struct ForwardResult {
    Tensor output;
    ForwardCache cache;
};

struct BackwardResult {
    Tensor dx;
    std::vector<double> dparams;
};

/// An ordered, shape-validated sequence of layers. Parameters are not owned:
/// callers pass the stack's flat segment (layer order ascending, weights
/// before biases) to forward/backward.
class LayerStack {
public:
    LayerStack() = default;
    LayerStack(Shape input_shape, std::vector<LayerSpec> layers);

    const Shape& input_shape() const noexcept { return input_shape_; }
    const Shape& output_shape() const noexcept { return shapes_.back(); }
    const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
    std::size_t param_count() const noexcept { return param_count_; }
    /// Offset of layer i's parameters inside the stack segment.
    std::size_t param_offset(std::size_t i) const { return offsets_.at(i); }

    ForwardResult forward(std::span<const double> params, const Tensor& x) const;

    /// Back-propagates `dy`, *adding* parameter gradients into `grad`
    /// (length param_count()). Returns dL/dx.
    Tensor backward(std::span<const double> params, const ForwardCache& cache, const Tensor& dy,
                    std::span<double> grad) const;

    BackwardResult backward(std::span<const double> params, const ForwardCache& cache, const Tensor& dy) const;

    /// Glorot-uniform weights, zero biases.
    std::vector<double> init_params(Rng& rng) const;

    friend bool operator==(const LayerStack& a, const LayerStack& b) {
        return a.input_shape_ == b.input_shape_ && a.layers_ == b.layers_;
    }

private:
    Shape input_shape_{1};
    std::vector<LayerSpec> layers_;
    std::vector<Shape> shapes_{Shape{1}};   // shapes_[i] = input of layer i; back() = output
    std::vector<std::size_t> offsets_;
    std::size_t param_count_ = 0;
    std::uint64_t id_ = 0;
};

}  // namespace fedaux::nn
