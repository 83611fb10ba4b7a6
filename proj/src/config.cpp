#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fedaux/errors.hpp"
#include "fedaux/experiment.hpp"

namespace fedaux {

using nlohmann::json;

namespace {

// Reads an object field by field and rejects keys nobody asked for.
class StrictObject {
public:
    StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        read(j_.at(key), path_ + "." + key, out);
    }

    const json* sub(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return nullptr;
        return &j_.at(key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.contains(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }

private:
    static void read(const json& v, const std::string& path, double& out) {
        if (!v.is_number()) throw ConfigError(path + ": expected a number");
        out = v.get<double>();
    }
    static void read(const json& v, const std::string& path, bool& out) {
        if (!v.is_boolean()) throw ConfigError(path + ": expected true/false");
        out = v.get<bool>();
    }
    static void read(const json& v, const std::string& path, int& out) {
        if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
        out = v.get<int>();
    }
    static void read(const json& v, const std::string& path, std::uint64_t& out) {
        if (!v.is_number_unsigned()) throw ConfigError(path + ": expected a non-negative integer");
        out = v.get<std::uint64_t>();
    }
    static void read(const json& v, const std::string& path, std::string& out) {
        if (!v.is_string()) throw ConfigError(path + ": expected a string");
        out = v.get<std::string>();
    }
    template <class T>
    static void read(const json& v, const std::string& path, std::vector<T>& out) {
        if (!v.is_array()) throw ConfigError(path + ": expected an array");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            T item{};
            read(v[i], path + "[" + std::to_string(i) + "]", item);
            out.push_back(std::move(item));
        }
    }
    static void read(const json& v, const std::string& path, std::map<std::string, double>& out) {
        if (!v.is_object()) throw ConfigError(path + ": expected an object");
        out.clear();
        for (auto it = v.begin(); it != v.end(); ++it) {
            double d = 0.0;
            read(it.value(), path + "." + it.key(), d);
            out[it.key()] = d;
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

mtl::LayerConfig parse_layer(const json& j, const std::string& path) {
    StrictObject o(j, path);
    mtl::LayerConfig l;
    std::uint64_t out_channels = 0, kernel = 0, stride = 1, pool = 0, out_features = 0;
    o.get("type", l.type);
    o.get("out_channels", out_channels);
    o.get("kernel_size", kernel);
    o.get("stride", stride);
    o.get("pool_size", pool);
    o.get("out_features", out_features);
    o.finish();
    l.out_channels = out_channels;
    l.kernel_size = kernel;
    l.stride = stride;
    l.pool_size = pool;
    l.out_features = out_features;
    return l;
}

std::vector<mtl::LayerConfig> parse_layers(const json* j, const std::string& path) {
    std::vector<mtl::LayerConfig> out;
    if (!j) return out;
    if (!j->is_array()) throw ConfigError(path + ": expected an array of layers");
    for (std::size_t i = 0; i < j->size(); ++i) out.push_back(parse_layer((*j)[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

DeviceConfig parse_device(const json& j, const std::string& path) {
    StrictObject o(j, path);
    DeviceConfig d;
    o.get("cycles_per_bit", d.cycles_per_bit);
    o.get("cpu_freq_hz", d.cpu_freq_hz);
    o.get("capacitance", d.capacitance);
    o.finish();
    return d;
}

json layer_json(const mtl::LayerConfig& l) {
    return {{"type", l.type},           {"out_channels", l.out_channels}, {"kernel_size", l.kernel_size},
            {"stride", l.stride},       {"pool_size", l.pool_size},       {"out_features", l.out_features}};
}

json device_json(const DeviceConfig& d) {
    return {{"cycles_per_bit", d.cycles_per_bit}, {"cpu_freq_hz", d.cpu_freq_hz}, {"capacitance", d.capacitance}};
}

ExperimentConfig parse(const json& root) {
    ExperimentConfig c;
    StrictObject top(root, "config");
    top.get("seed", c.seed);
    top.get("output_dir", c.output_dir);

    if (const json* j = top.sub("dataset")) {
        StrictObject o(*j, "config.dataset");
        std::uint64_t bins = c.dataset.aux_bins;
        o.get("source", c.dataset.source);
        o.get("csv_path", c.dataset.csv_path);
        o.get("class_names", c.dataset.class_names);
        o.get("aux_bins", bins);
        o.get("test_fraction", c.dataset.test_fraction);
        o.get("validation_fraction", c.dataset.validation_fraction);
        c.dataset.aux_bins = bins;
        if (const json* s = o.sub("synthetic")) {
            StrictObject so(*s, "config.dataset.synthetic");
            auto& sp = c.dataset.synthetic;
            std::uint64_t samples = sp.samples, flen = sp.feature_length;
            so.get("main_classes", sp.main_classes);
            so.get("aux_ids", sp.aux_ids);
            so.get("aux_classes", sp.aux_classes);
            so.get("samples", samples);
            so.get("feature_length", flen);
            so.get("noise", sp.noise);
            so.get("label_noise", sp.label_noise);
            so.get("separation", sp.separation);
            so.finish();
            sp.samples = samples;
            sp.feature_length = flen;
        }
        o.finish();
    }

    if (const json* j = top.sub("partition")) {
        StrictObject o(*j, "config.partition");
        std::string mode = data::to_string(c.partition.mode);
        std::uint64_t stations = c.partition.stations;
        o.get("mode", mode);
        o.get("alpha", c.partition.alpha);
        o.get("stations", stations);
        o.finish();
        c.partition.mode = data::parse_partition_mode(mode);
        c.partition.stations = stations;
    }

    if (const json* j = top.sub("tasks")) {
        if (!j->is_array()) throw ConfigError("config.tasks: expected an array");
        c.tasks.clear();
        for (std::size_t i = 0; i < j->size(); ++i) {
            StrictObject o((*j)[i], "config.tasks[" + std::to_string(i) + "]");
            TaskConfig t;
            std::string role;
            o.get("id", t.id);
            o.get("role", role);
            o.get("num_classes", t.num_classes);
            o.finish();
            if (role == "main") t.role = mtl::TaskRole::Main;
            else if (role == "auxiliary") t.role = mtl::TaskRole::Auxiliary;
            else throw ConfigError("config.tasks[" + std::to_string(i) + "].role must be 'main' or 'auxiliary'");
            c.tasks.push_back(std::move(t));
        }
    }

    if (const json* j = top.sub("model")) {
        StrictObject o(*j, "config.model");
        mtl::ArchitectureSpec a;
        std::vector<std::uint64_t> shape;
        o.get("input_shape", shape);
        a.input_shape.assign(shape.begin(), shape.end());
        a.trunk = parse_layers(o.sub("trunk"), "config.model.trunk");
        a.head_hidden = parse_layers(o.sub("head_hidden"), "config.model.head_hidden");
        o.finish();
        c.model = std::move(a);
    }

    if (const json* j = top.sub("training")) {
        StrictObject o(*j, "config.training");
        auto& t = c.training;
        std::uint64_t rounds = t.rounds, batch = t.batch_size, epochs = t.epochs;
        std::string resample = mtl::to_string(t.rlw_resample);
        o.get("rounds", rounds);
        o.get("eta", t.eta);
        o.get("batch_size", batch);
        o.get("epochs", epochs);
        o.get("participation", t.participation);
        o.get("rlw_resample", resample);
        o.get("parallel_stations", t.parallel_stations);
        o.get("record_wall_clock", t.record_wall_clock);
        o.finish();
        t.rounds = rounds;
        t.batch_size = batch;
        t.epochs = epochs;
        t.rlw_resample = mtl::parse_granularity(resample);
    }

    top.get("targets", c.targets);
    top.get("baselines", c.baselines);
    if (const json* j = top.sub("device")) c.device = parse_device(*j, "config.device");
    if (const json* j = top.sub("station_devices")) {
        if (!j->is_array()) throw ConfigError("config.station_devices: expected an array");
        for (std::size_t i = 0; i < j->size(); ++i)
            c.station_devices.push_back(parse_device((*j)[i], "config.station_devices[" + std::to_string(i) + "]"));
    }
    if (const json* j = top.sub("cost")) {
        StrictObject o(*j, "config.cost");
        o.get("bytes_per_param", c.cost.bytes_per_param);
        o.get("bytes_per_mb", c.cost.bytes_per_mb);
        o.get("feature_bits", c.cost.feature_bits);
        o.get("label_bits", c.cost.label_bits);
        o.finish();
    }
    top.finish();
    validate(c);
    return c;
}

}  // namespace

void validate(const ExperimentConfig& c) {
    if (c.dataset.source != "synthetic" && c.dataset.source != "csv")
        throw ConfigError("config.dataset.source must be 'synthetic' or 'csv'");
    if (c.dataset.source == "csv" && c.dataset.csv_path.empty())
        throw ConfigError("config.dataset.csv_path is required for csv datasets");
    if (c.dataset.aux_bins < 2) throw ConfigError("config.dataset.aux_bins must be >= 2");
    if (!(c.dataset.validation_fraction > 0.0)) throw ConfigError("config.dataset.validation_fraction must be > 0");
    if (c.partition.stations == 0) throw ConfigError("config.partition.stations must be >= 1");
    if (c.partition.mode == data::PartitionMode::Dirichlet && !(c.partition.alpha > 0.0))
        throw ConfigError("config.partition.alpha must be > 0");

    std::set<std::string> ids;
    std::size_t mains = 0;
    for (const auto& t : c.tasks) {
        if (t.id.empty()) throw ConfigError("config.tasks: empty task id");
        if (!ids.insert(t.id).second) throw ConfigError("config.tasks: duplicate id '" + t.id + "'");
        if (t.role == mtl::TaskRole::Main) ++mains;
        if (t.num_classes != 0 && t.num_classes < 2)
            throw ConfigError("config.tasks: '" + t.id + "' num_classes must be >= 2");
    }
    if (mains != 1) throw ConfigError("config.tasks: exactly one main task required");
    for (const auto& [id, kappa] : c.targets) {
        if (!ids.contains(id)) throw ConfigError("config.targets: unknown task '" + id + "'");
        if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("config.targets." + id + " must lie in (0,1)");
    }
    if (c.baselines.empty()) throw ConfigError("config.baselines: at least one baseline required");
    for (const auto& b : c.baselines) {
        const auto parsed = parse_baseline(b);
        if (!parsed.task.empty() && !ids.contains(parsed.task))
            throw ConfigError("baseline '" + b + "' references unknown task '" + parsed.task + "'");
    }
    if (!c.station_devices.empty() && c.station_devices.size() != c.partition.stations)
        throw ConfigError("config.station_devices must list one profile per station");
    if (c.cost.bytes_per_param == 0 || c.cost.bytes_per_mb == 0)
        throw ConfigError("config.cost byte conventions must be >= 1");
    sim::RoundConfig rc;
    rc.rounds = c.training.rounds;
    rc.eta = c.training.eta;
    rc.batch_size = c.training.batch_size;
    rc.epochs = c.training.epochs;
    rc.participation = c.training.participation;
    sim::validate(rc);
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse(root);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

std::string config_to_json_text(const ExperimentConfig& c) {
    const auto& sp = c.dataset.synthetic;
    json j;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["dataset"] = {{"source", c.dataset.source},
                    {"csv_path", c.dataset.csv_path},
                    {"class_names", c.dataset.class_names},
                    {"aux_bins", c.dataset.aux_bins},
                    {"test_fraction", c.dataset.test_fraction},
                    {"validation_fraction", c.dataset.validation_fraction},
                    {"synthetic",
                     {{"main_classes", sp.main_classes},
                      {"aux_ids", sp.aux_ids},
                      {"aux_classes", sp.aux_classes},
                      {"samples", sp.samples},
                      {"feature_length", sp.feature_length},
                      {"noise", sp.noise},
                      {"label_noise", sp.label_noise},
                      {"separation", sp.separation}}}};
    j["partition"] = {{"mode", data::to_string(c.partition.mode)},
                      {"alpha", c.partition.alpha},
                      {"stations", c.partition.stations}};
    j["tasks"] = json::array();
    for (const auto& t : c.tasks)
        j["tasks"].push_back({{"id", t.id},
                              {"role", t.role == mtl::TaskRole::Main ? "main" : "auxiliary"},
                              {"num_classes", t.num_classes}});
    if (c.model) {
        json trunk = json::array(), heads = json::array();
        for (const auto& l : c.model->trunk) trunk.push_back(layer_json(l));
        for (const auto& l : c.model->head_hidden) heads.push_back(layer_json(l));
        j["model"] = {{"input_shape", c.model->input_shape}, {"trunk", trunk}, {"head_hidden", heads}};
    } else {
        j["model"] = nullptr;
    }
    j["training"] = {{"rounds", c.training.rounds},
                     {"eta", c.training.eta},
                     {"batch_size", c.training.batch_size},
                     {"epochs", c.training.epochs},
                     {"participation", c.training.participation},
                     {"rlw_resample", mtl::to_string(c.training.rlw_resample)},
                     {"parallel_stations", c.training.parallel_stations},
                     {"record_wall_clock", c.training.record_wall_clock}};
    j["targets"] = c.targets;
    j["baselines"] = c.baselines;
    j["device"] = device_json(c.device);
    j["station_devices"] = json::array();
    for (const auto& d : c.station_devices) j["station_devices"].push_back(device_json(d));
    j["cost"] = {{"bytes_per_param", c.cost.bytes_per_param},
                 {"bytes_per_mb", c.cost.bytes_per_mb},
                 {"feature_bits", c.cost.feature_bits},
                 {"label_bits", c.cost.label_bits}};
    return j.dump(2) + "\n";
}

}  // namespace fedaux
