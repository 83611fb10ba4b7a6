#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fedaux/rng.hpp"

namespace fedaux::mtl {

/// Auxiliary: main task at weight 1 plus weighted auxiliary losses.
/// Joint: weighted sum over every task (conventional multi-task objective).
enum class LossMode { Auxiliary, Joint };

enum class WeightingKind { Equal, Random };

/// How often random loss weights are redrawn during local training.
enum class ResampleGranularity { PerBatch, PerEpoch, PerRound };

struct WeightingStrategy {
    WeightingKind kind = WeightingKind::Random;
    LossMode mode = LossMode::Auxiliary;
    ResampleGranularity granularity = ResampleGranularity::PerBatch;
    friend bool operator==(const WeightingStrategy&, const WeightingStrategy&) = default;
};

/// Random loss weights: i.i.d. standard-normal logits mapped through softmax.
std::vector<double> sample_rlw(Rng& rng, std::size_t n);

/// Uniform 1/n weights (also the expectation of sample_rlw).
std::vector<double> equal_weights(std::size_t n);

/// Weights for one draw under `strategy` over a scope of `n` tasks.
std::vector<double> draw_weights(const WeightingStrategy& strategy, Rng& rng, std::size_t n);

std::string to_string(LossMode mode);
std::string to_string(WeightingKind kind);
std::string to_string(ResampleGranularity g);
ResampleGranularity parse_granularity(const std::string& s);

}  // namespace fedaux::mtl
