#include "fedaux/architecture.hpp"

#include "fedaux/errors.hpp"

namespace fedaux::mtl {

ArchitectureSpec default_architecture(std::size_t feature_length) {
    ArchitectureSpec a;
    a.input_shape = {1, feature_length};
    a.trunk = {
        {.type = "conv1d", .out_channels = 8, .kernel_size = 5},
        {.type = "relu"},
        {.type = "maxpool1d", .pool_size = 2},
        {.type = "flatten"},
        {.type = "dense", .out_features = 32},
        {.type = "relu"},
    };
    a.head_hidden = {
        {.type = "dense", .out_features = 16},
        {.type = "relu"},
    };
    return a;
}

nn::LayerStack build_stack(const nn::Shape& input_shape, const std::vector<LayerConfig>& layers) {
    std::vector<nn::LayerSpec> specs;
    nn::Shape shape = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        nn::LayerSpec spec;
        if (l.type == "conv1d") {
            if (shape.size() != 2) throw ConfigError("layer " + std::to_string(i) + " (conv1d): needs [channels,length] input");
            spec = nn::Conv1D{shape[0], l.out_channels, l.kernel_size, l.stride};
        } else if (l.type == "relu") {
            spec = nn::ReLU{};
        } else if (l.type == "maxpool1d") {
            spec = nn::MaxPool1D{l.pool_size};
        } else if (l.type == "flatten") {
            spec = nn::Flatten{};
        } else if (l.type == "dense") {
            if (shape.size() != 1) throw ConfigError("layer " + std::to_string(i) + " (dense): needs flat input, add a flatten layer");
            spec = nn::Dense{shape[0], l.out_features};
        } else {
            throw ConfigError("layer " + std::to_string(i) + ": unknown type '" + l.type + "'");
        }
        shape = nn::layer_output_shape(spec, shape, i);
        specs.push_back(spec);
    }
    return nn::LayerStack(input_shape, std::move(specs));
}

HardSharedModel build_model(const ArchitectureSpec& arch, const std::vector<TaskSpec>& tasks) {
    nn::LayerStack trunk = build_stack(arch.input_shape, arch.trunk);
    const nn::Shape features = trunk.output_shape();
    std::vector<nn::LayerStack> heads;
    for (const auto& task : tasks) {
        auto layers = arch.head_hidden;
        if (features.size() != 1 && (layers.empty() || layers.front().type != "flatten"))
            layers.insert(layers.begin(), LayerConfig{.type = "flatten"});
        layers.push_back({.type = "dense", .out_features = static_cast<std::size_t>(task.num_classes)});
        heads.push_back(build_stack(features, layers));
    }
    return HardSharedModel(std::move(trunk), tasks, std::move(heads));
}

}  // namespace fedaux::mtl
