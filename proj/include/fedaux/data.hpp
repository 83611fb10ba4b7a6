#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fedaux::data {

struct FlowSample {
    std::vector<double> features;
    int main_label = 0;
    std::vector<int> aux_labels;  // aligned with Dataset::aux_ids
    friend bool operator==(const FlowSample&, const FlowSample&) = default;
};

struct Dataset {
    std::size_t feature_length = 0;
    std::vector<std::string> class_names;  // main-task classes, index = label
    std::vector<std::string> aux_ids;
    std::vector<int> aux_classes;          // class count per aux task
    std::vector<FlowSample> samples;

    std::size_t size() const noexcept { return samples.size(); }
    std::vector<int> main_labels() const;
};

// ---- CSV ingestion ----

/// Expected header: label,duration,bandwidth,f_0,...,f_{n-1}.
struct CsvSchema {
    /// When non-empty, the closed set of admissible labels; anything else is
    /// a DataError. When empty, classes are whatever the file contains.
    std::vector<std::string> class_names;
};

struct RawFlows {
    Dataset dataset;  // aux labels not yet derived
    std::vector<double> duration;
    std::vector<double> bandwidth;
};

/// Parses a flow CSV (RFC-4180 quoting). Class names map to indices in
/// sorted order. Throws DataError with the 1-based line number on
/// malformed input.
RawFlows load_flows(const std::filesystem::path& path, const CsvSchema& schema = {});
RawFlows parse_flows(std::istream& in, const std::string& source, const CsvSchema& schema = {});

/// Splits one CSV record into cells, honouring double-quote escaping.
std::vector<std::string> split_csv_record(const std::string& line);

// ---- auxiliary labels ----

/// Equal-frequency binning fitted on training values only. A value v lands
/// in bin k when boundary[k-1] <= v < boundary[k]; values below every
/// boundary go to bin 0, above every boundary to the last bin.
class QuantileBins {
public:
    QuantileBins() = default;
    explicit QuantileBins(std::vector<double> boundaries) : boundaries_(std::move(boundaries)) {}

    static QuantileBins fit(std::span<const double> train_values, std::size_t n_bins);

    int assign(double v) const noexcept;
    std::size_t bin_count() const noexcept { return boundaries_.size() + 1; }
    const std::vector<double>& boundaries() const noexcept { return boundaries_; }

private:
    std::vector<double> boundaries_;
};

// ---- splitting & partitioning ----

/// Seeded shuffle of 0..n-1 followed by contiguous cuts at
/// floor(cumulative_ratio * n). Ratios must sum to 1 (1e-9) and every part
/// must be non-empty.
std::vector<std::vector<std::size_t>> split_indices(std::size_t n, std::span<const double> ratios, std::uint64_t seed);

struct DatasetSplit {
    std::vector<std::size_t> train;       // distributed to stations
    std::vector<std::size_t> validation;  // single global validation set
    std::vector<std::size_t> test;
};

/// Train/test cut by `test_fraction`, then `validation_fraction` of the
/// training part held out as validation.
DatasetSplit make_split(std::size_t n, double test_fraction, double validation_fraction, std::uint64_t seed);

enum class PartitionMode { Iid, Dirichlet };

struct PartitionPlan {
    PartitionMode mode = PartitionMode::Dirichlet;
    double alpha = 0.5;
    std::uint64_t seed = 0;
    std::size_t stations = 1;
    std::vector<std::vector<std::size_t>> shards;  // dataset indices, ascending
};

std::string to_string(PartitionMode m);
PartitionMode parse_partition_mode(const std::string& s);

/// Distributes `pool` (dataset indices) over stations. Dirichlet mode draws
/// per-class station proportions from Dirichlet(alpha) and then repairs
/// empty shards; iid mode deals a shuffled, class-sorted pool round-robin.
PartitionPlan partition(std::span<const std::size_t> pool, std::span<const int> labels, PartitionMode mode,
                        double alpha, std::size_t stations, std::uint64_t seed);

// ---- synthetic data ----

struct SynthSpec {
    int main_classes = 5;
    std::vector<std::string> aux_ids{"duration", "bandwidth"};
    std::vector<int> aux_classes{3, 3};
    std::size_t samples = 3000;
    std::size_t feature_length = 32;
    double noise = 2.0;          // sample-level spread around the class pattern
    double label_noise = 0.1;    // probability an aux label is replaced at random
    double separation = 1.0;     // scale of class prototypes
    friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

/// Main class c owns a prototype p_c and latent coordinates l_c. A sample
/// carries latent h_j = l_cj + noise * e_j, features
/// x = p_c + sum_j h_j d_j + noise * e, and aux label j = quantile bin of h_j
/// (replaced uniformly at random with probability label_noise).
Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

}  // namespace fedaux::data
