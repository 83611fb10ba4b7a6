#include "fedaux/weighting.hpp"

#include "fedaux/errors.hpp"
#include "fedaux/loss.hpp"

namespace fedaux::mtl {

std::vector<double> sample_rlw(Rng& rng, std::size_t n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> logits(n);
    for (double& z : logits) z = normal(rng);
    return nn::softmax(logits);
}

std::vector<double> equal_weights(std::size_t n) {
    return std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0);
}

std::vector<double> draw_weights(const WeightingStrategy& strategy, Rng& rng, std::size_t n) {
    return strategy.kind == WeightingKind::Random ? sample_rlw(rng, n) : equal_weights(n);
}

std::string to_string(LossMode mode) {
    return mode == LossMode::Auxiliary ? "auxiliary" : "joint";
}

std::string to_string(WeightingKind kind) {
    return kind == WeightingKind::Random ? "rlw" : "elw";
}

std::string to_string(ResampleGranularity g) {
    switch (g) {
        case ResampleGranularity::PerBatch: return "batch";
        case ResampleGranularity::PerEpoch: return "epoch";
        case ResampleGranularity::PerRound: return "round";
    }
    return "batch";
}

ResampleGranularity parse_granularity(const std::string& s) {
    if (s == "batch") return ResampleGranularity::PerBatch;
    if (s == "epoch") return ResampleGranularity::PerEpoch;
    if (s == "round") return ResampleGranularity::PerRound;
    throw ConfigError("unknown RLW resample granularity '" + s + "' (expected batch, epoch or round)");
}

}  // namespace fedaux::mtl
