#include <algorithm>
#include <cmath>

#include "fedaux/data.hpp"
#include "fedaux/errors.hpp"
#include "fedaux/rng.hpp"

namespace fedaux::data {

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.main_classes < 2) throw ConfigError("synthetic main task needs >= 2 classes");
    if (spec.aux_ids.size() != spec.aux_classes.size()) throw ConfigError("synthetic aux ids/classes length mismatch");
    for (int k : spec.aux_classes)
        if (k < 2) throw ConfigError("synthetic aux task needs >= 2 classes");
    if (spec.samples == 0 || spec.feature_length == 0) throw ConfigError("synthetic samples/feature_length must be >= 1");
    if (!(spec.noise >= 0.0) || !(spec.label_noise >= 0.0 && spec.label_noise <= 1.0))
        throw ConfigError("synthetic noise must be >= 0 and label_noise in [0,1]");

    Rng rng(derive_seed(seed, {stream::kSynth}));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n_aux = spec.aux_ids.size();
    const std::size_t f = spec.feature_length;
    const auto n_classes = static_cast<std::size_t>(spec.main_classes);

    std::vector<std::vector<double>> prototypes(n_classes, std::vector<double>(f));
    std::vector<std::vector<double>> latent(n_classes, std::vector<double>(n_aux));
    std::vector<std::vector<double>> directions(n_aux, std::vector<double>(f));
    for (auto& p : prototypes)
        for (double& v : p) v = spec.separation * normal(rng);
    for (auto& l : latent)
        for (double& v : l) v = normal(rng);
    for (auto& d : directions) {
        double norm = 0.0;
        for (double& v : d) {
            v = normal(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : d) v *= spec.separation * std::sqrt(static_cast<double>(f)) / norm / 2.0;
    }

    Dataset ds;
    ds.feature_length = f;
    for (std::size_t c = 0; c < n_classes; ++c) ds.class_names.push_back("class" + std::to_string(c));
    ds.aux_ids = spec.aux_ids;
    ds.aux_classes = spec.aux_classes;
    ds.samples.resize(spec.samples);

    std::vector<std::vector<double>> h(n_aux, std::vector<double>(spec.samples));
    for (std::size_t i = 0; i < spec.samples; ++i) {
        auto& s = ds.samples[i];
        const std::size_t c = i % n_classes;
        s.main_label = static_cast<int>(c);
        s.features = prototypes[c];
        for (std::size_t j = 0; j < n_aux; ++j) {
            h[j][i] = latent[c][j] + spec.noise * normal(rng);
            for (std::size_t k = 0; k < f; ++k) s.features[k] += h[j][i] * directions[j][k];
        }
        for (double& v : s.features) v += spec.noise * normal(rng);
    }

    for (std::size_t j = 0; j < n_aux; ++j) {
        const auto k = spec.aux_classes[j];
        const auto bins = QuantileBins::fit(h[j], static_cast<std::size_t>(k));
        std::uniform_int_distribution<int> random_class(0, k - 1);
        for (std::size_t i = 0; i < spec.samples; ++i) {
            int label = bins.assign(h[j][i]);
            if (spec.label_noise > 0.0 && unit(rng) < spec.label_noise) label = random_class(rng);
            ds.samples[i].aux_labels.push_back(label);
        }
    }
    // Generation interleaves classes; shuffle so row order carries no label signal.
    std::shuffle(ds.samples.begin(), ds.samples.end(), rng);
    return ds;
}

}  // namespace fedaux::data
