#include "fedaux/experiment.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "fedaux/errors.hpp"

namespace fedaux {

std::string Baseline::name() const {
    switch (kind) {
        case BaselineKind::FedAuxRlw: return "fedaux-rlw";
        case BaselineKind::FedAuxElw: return "fedaux-elw";
        case BaselineKind::MtdnnRlw: return "mtdnn-rlw";
        case BaselineKind::MtdnnElw: return "mtdnn-elw";
        case BaselineKind::FedAvgSingle: return task.empty() ? "fedavg-single" : "fedavg-single:" + task;
        case BaselineKind::BaselineIid: return "baseline-iid";
    }
    return "unknown";
}

std::string Baseline::dir_name() const {
    std::string n = name();
    std::replace(n.begin(), n.end(), ':', '-');
    return n;
}

Baseline parse_baseline(const std::string& name) {
    if (name == "fedaux-rlw") return {BaselineKind::FedAuxRlw, {}};
    if (name == "fedaux-elw") return {BaselineKind::FedAuxElw, {}};
    if (name == "mtdnn-rlw") return {BaselineKind::MtdnnRlw, {}};
    if (name == "mtdnn-elw") return {BaselineKind::MtdnnElw, {}};
    if (name == "baseline-iid") return {BaselineKind::BaselineIid, {}};
    if (name == "fedavg-single") return {BaselineKind::FedAvgSingle, {}};
    const std::string prefix = "fedavg-single:";
    if (name.rfind(prefix, 0) == 0 && name.size() > prefix.size())
        return {BaselineKind::FedAvgSingle, name.substr(prefix.size())};
    throw ConfigError("unknown baseline '" + name +
                      "' (expected fedaux-rlw, fedaux-elw, mtdnn-rlw, mtdnn-elw, fedavg-single[:task], baseline-iid)");
}

double shard_bits(std::size_t samples, std::size_t features, std::size_t tasks, const CostConfig& cost) {
    return static_cast<double>(samples) *
           static_cast<double>(features * cost.feature_bits + tasks * cost.label_bits);
}

namespace {

// Column of a task in FlowSample: -1 = main label, otherwise aux index. Aux
// ids win so a single-task run on an aux column still reads that column.
int label_column(const data::Dataset& ds, const mtl::TaskSpec& task) {
    const auto it = std::find(ds.aux_ids.begin(), ds.aux_ids.end(), task.id);
    if (it != ds.aux_ids.end()) return static_cast<int>(it - ds.aux_ids.begin());
    if (task.role == mtl::TaskRole::Main) return -1;
    throw ConfigError("auxiliary task '" + task.id + "' has no label column in the dataset");
}

}  // namespace

mtl::LabeledSet make_labeled_set(const data::Dataset& ds, std::span<const std::size_t> rows,
                                 std::span<const mtl::TaskSpec> tasks) {
    mtl::LabeledSet out;
    out.feature_length = ds.feature_length;
    out.features.reserve(rows.size() * ds.feature_length);
    std::vector<int> columns;
    for (const auto& t : tasks) columns.push_back(label_column(ds, t));
    out.labels.assign(tasks.size(), {});
    for (auto r : rows) {
        const auto& s = ds.samples.at(r);
        out.features.insert(out.features.end(), s.features.begin(), s.features.end());
        for (std::size_t t = 0; t < tasks.size(); ++t)
            out.labels[t].push_back(columns[t] < 0 ? s.main_label : s.aux_labels.at(static_cast<std::size_t>(columns[t])));
    }
    return out;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
    validate(cfg);
    PreparedData p;
    if (cfg.dataset.source == "synthetic") {
        p.dataset = data::synth_generate(cfg.dataset.synthetic, cfg.seed);
        p.split = data::make_split(p.dataset.size(), cfg.dataset.test_fraction, cfg.dataset.validation_fraction, cfg.seed);
    } else {
        auto raw = data::load_flows(cfg.dataset.csv_path, data::CsvSchema{cfg.dataset.class_names});
        p.dataset = std::move(raw.dataset);
        p.split = data::make_split(p.dataset.size(), cfg.dataset.test_fraction, cfg.dataset.validation_fraction, cfg.seed);
        p.dataset.aux_ids = {"duration", "bandwidth"};
        p.dataset.aux_classes = {static_cast<int>(cfg.dataset.aux_bins), static_cast<int>(cfg.dataset.aux_bins)};
        for (const auto* column : {&raw.duration, &raw.bandwidth}) {
            std::vector<double> train_values;
            for (auto i : p.split.train) train_values.push_back((*column)[i]);
            p.bins.push_back(data::QuantileBins::fit(train_values, cfg.dataset.aux_bins));
            for (std::size_t i = 0; i < p.dataset.size(); ++i)
                p.dataset.samples[i].aux_labels.push_back(p.bins.back().assign((*column)[i]));
        }
    }

    for (const auto& t : cfg.tasks) {
        int classes = 0;
        if (t.role == mtl::TaskRole::Main) {
            if (std::find(p.dataset.aux_ids.begin(), p.dataset.aux_ids.end(), t.id) != p.dataset.aux_ids.end())
                throw ConfigError("main task '" + t.id + "' clashes with an auxiliary label column");
            classes = static_cast<int>(p.dataset.class_names.size());
        } else {
            const auto it = std::find(p.dataset.aux_ids.begin(), p.dataset.aux_ids.end(), t.id);
            if (it == p.dataset.aux_ids.end())
                throw ConfigError("auxiliary task '" + t.id + "' is not a label column of the dataset");
            classes = p.dataset.aux_classes[static_cast<std::size_t>(it - p.dataset.aux_ids.begin())];
        }
        if (t.num_classes != 0 && t.num_classes != classes)
            throw ConfigError("task '" + t.id + "' declares " + std::to_string(t.num_classes) + " classes, data has " +
                              std::to_string(classes));
        p.tasks.push_back({t.id, t.role, classes});
    }

    const auto labels = p.dataset.main_labels();
    p.plan = data::partition(p.split.train, labels, cfg.partition.mode, cfg.partition.alpha, cfg.partition.stations,
                             cfg.seed);
    p.iid_plan = data::partition(p.split.train, labels, data::PartitionMode::Iid, cfg.partition.alpha,
                                 cfg.partition.stations, cfg.seed);
    return p;
}

std::string partition_manifest_json(const ExperimentConfig& cfg, const PreparedData& p) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["mode"] = data::to_string(p.plan.mode);
    j["alpha"] = p.plan.alpha;
    j["stations"] = p.plan.stations;
    j["train_pool"] = p.split.train.size();
    j["validation"] = p.split.validation;
    j["test"] = p.split.test;
    j["class_names"] = p.dataset.class_names;
    j["shards"] = nlohmann::json::array();
    for (std::size_t u = 0; u < p.plan.shards.size(); ++u) {
        std::vector<std::size_t> hist(p.dataset.class_names.size(), 0);
        for (auto i : p.plan.shards[u]) ++hist[static_cast<std::size_t>(p.dataset.samples[i].main_label)];
        j["shards"].push_back({{"station", u}, {"size", p.plan.shards[u].size()}, {"class_histogram", hist},
                               {"indices", p.plan.shards[u]}});
    }
    if (!p.bins.empty()) {
        j["aux_bin_boundaries"] = nlohmann::json::object();
        for (std::size_t k = 0; k < p.bins.size(); ++k) j["aux_bin_boundaries"][p.dataset.aux_ids[k]] = p.bins[k].boundaries();
    }
    return j.dump(2) + "\n";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const PreparedData& prepared, const Baseline& baseline,
                                const sim::MetricsSink& sink) {
    ExperimentResult res;
    res.baseline = baseline;

    mtl::WeightingStrategy strategy;
    strategy.granularity = cfg.training.rlw_resample;
    std::vector<mtl::TaskSpec> tasks = prepared.tasks;
    const data::PartitionPlan* plan = &prepared.plan;
    switch (baseline.kind) {
        case BaselineKind::FedAuxRlw:
            strategy.kind = mtl::WeightingKind::Random;
            strategy.mode = mtl::LossMode::Auxiliary;
            break;
        case BaselineKind::FedAuxElw:
            strategy.kind = mtl::WeightingKind::Equal;
            strategy.mode = mtl::LossMode::Auxiliary;
            break;
        case BaselineKind::MtdnnRlw:
            strategy.kind = mtl::WeightingKind::Random;
            strategy.mode = mtl::LossMode::Joint;
            break;
        case BaselineKind::MtdnnElw:
            strategy.kind = mtl::WeightingKind::Equal;
            strategy.mode = mtl::LossMode::Joint;
            break;
        case BaselineKind::BaselineIid:
            strategy.kind = mtl::WeightingKind::Random;
            strategy.mode = mtl::LossMode::Auxiliary;
            plan = &prepared.iid_plan;
            break;
        case BaselineKind::FedAvgSingle: {
            strategy.kind = mtl::WeightingKind::Equal;
            strategy.mode = mtl::LossMode::Auxiliary;
            const auto it = std::find_if(tasks.begin(), tasks.end(), [&](const mtl::TaskSpec& t) {
                return baseline.task.empty() ? t.role == mtl::TaskRole::Main : t.id == baseline.task;
            });
            if (it == tasks.end()) throw ConfigError("baseline '" + baseline.name() + "' names an unknown task");
            mtl::TaskSpec single = *it;
            single.role = mtl::TaskRole::Main;
            tasks = {single};
            break;
        }
    }
    res.tasks = tasks;

    const auto arch = cfg.model ? *cfg.model : mtl::default_architecture(prepared.dataset.feature_length);
    auto model = mtl::build_model(arch, tasks);
    res.param_count = model.param_count();

    // Every baseline starts from the same seed-derived stream; models differ in shape, so values differ.
    Rng init_rng = make_rng(cfg.seed, {stream::kInit});
    nn::ParamVector initial = model.init_params(init_rng);

    std::vector<sim::BaseStation> stations;
    std::vector<cost::DeviceProfile> profiles;
    for (std::size_t u = 0; u < plan->shards.size(); ++u) {
        sim::BaseStation st;
        st.id = u;
        st.shard = make_labeled_set(prepared.dataset, plan->shards[u], tasks);
        const auto& dev = cfg.station_devices.empty() ? cfg.device : cfg.station_devices[u];
        profiles.push_back({dev.cycles_per_bit, dev.cpu_freq_hz, dev.capacitance,
                            shard_bits(st.data_size(), prepared.dataset.feature_length, tasks.size(), cfg.cost)});
        res.shard_sizes.push_back(st.data_size());
        stations.push_back(std::move(st));
    }

    sim::RoundConfig rc;
    rc.rounds = cfg.training.rounds;
    rc.eta = cfg.training.eta;
    rc.batch_size = cfg.training.batch_size;
    rc.epochs = cfg.training.epochs;
    rc.participation = cfg.training.participation;
    rc.seed = cfg.seed;
    rc.strategy = strategy;
    rc.parallel_stations = cfg.training.parallel_stations;
    rc.record_wall_clock = cfg.training.record_wall_clock;

    sim::Simulation simulation(std::move(model), std::move(stations), std::move(initial), rc,
                               cost::CostLedger(std::move(profiles), {cfg.cost.bytes_per_param, cfg.cost.bytes_per_mb}),
                               make_labeled_set(prepared.dataset, prepared.split.validation, tasks),
                               make_labeled_set(prepared.dataset, prepared.split.test, tasks));
    res.rounds = simulation.run(sink);
    res.ledger = simulation.ledger();
    res.final_params = simulation.server().global;
    return res;
}

}  // namespace fedaux
