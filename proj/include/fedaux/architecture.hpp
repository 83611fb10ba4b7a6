#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fedaux/layers.hpp"
#include "fedaux/mtl_model.hpp"

namespace fedaux::mtl {

/// Config-level layer description; input sizes are inferred from the
/// preceding layer when the stack is built.
struct LayerConfig {
    std::string type;  // conv1d | relu | maxpool1d | flatten | dense
    std::size_t out_channels = 0;
    std::size_t kernel_size = 0;
    std::size_t stride = 1;
    std::size_t pool_size = 0;
    std::size_t out_features = 0;
    friend bool operator==(const LayerConfig&, const LayerConfig&) = default;
};

/// Trunk layers, plus hidden head layers shared in *shape* (not weights) by
/// every task; each head is closed by Dense(-> num_classes).
struct ArchitectureSpec {
    nn::Shape input_shape{1, 32};
    std::vector<LayerConfig> trunk;
    std::vector<LayerConfig> head_hidden;
    friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

/// Small 1D-CNN used when a config does not specify an architecture.
ArchitectureSpec default_architecture(std::size_t feature_length);

nn::LayerStack build_stack(const nn::Shape& input_shape, const std::vector<LayerConfig>& layers);
HardSharedModel build_model(const ArchitectureSpec& arch, const std::vector<TaskSpec>& tasks);

}  // namespace fedaux::mtl
