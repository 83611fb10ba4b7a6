#include "fedaux/report.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fedaux/csv.hpp"
#include "fedaux/errors.hpp"
#include "fedaux/experiment.hpp"

namespace fedaux::report {

using nlohmann::json;

namespace {

const std::vector<std::string> kMetricsHeader{"round",          "task_id",       "split",          "accuracy",
                                              "loss",           "total_global_loss", "comm_bytes_cum", "energy_j_cum",
                                              "modeled_s_cum",  "wall_ms"};

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string cell(const std::optional<double>& v) { return v ? csv::format_double(*v) : "not reached"; }

}  // namespace

std::vector<MetricsRow> to_rows(const std::vector<sim::RoundMetrics>& rounds, bool with_validation) {
    std::vector<MetricsRow> rows;
    for (const auto& r : rounds) {
        for (const auto& t : r.tasks) {
            for (int s = with_validation ? 0 : 1; s < 2; ++s) {
                const auto& ev = s == 0 ? t.validation : t.test;
                rows.push_back({r.round, t.task_id, s == 0 ? "validation" : "test", ev.accuracy, ev.loss,
                                r.total_global_loss, r.comm_bytes_cum, r.energy_j_cum, r.modeled_s_cum, r.wall_ms});
            }
        }
    }
    return rows;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    csv::write_row(out, kMetricsHeader);
    for (const auto& r : rows) {
        csv::write_row(out, {std::to_string(r.round), r.task_id, r.split, csv::format_double(r.accuracy),
                             csv::format_double(r.loss), csv::format_double(r.total_global_loss),
                             std::to_string(r.comm_bytes_cum), csv::format_double(r.energy_j_cum),
                             csv::format_double(r.modeled_s_cum), csv::format_double(r.wall_ms)});
    }
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
    const auto t = csv::read_table(path);
    std::vector<std::size_t> col;
    for (const auto& name : kMetricsHeader) col.push_back(t.column(name));
    std::vector<MetricsRow> rows;
    for (const auto& f : t.rows) {
        MetricsRow r;
        r.round = csv::parse_u64(f[col[0]]);
        r.task_id = f[col[1]];
        r.split = f[col[2]];
        r.accuracy = csv::parse_double(f[col[3]]);
        r.loss = csv::parse_double(f[col[4]]);
        r.total_global_loss = csv::parse_double(f[col[5]]);
        r.comm_bytes_cum = csv::parse_u64(f[col[6]]);
        r.energy_j_cum = csv::parse_double(f[col[7]]);
        r.modeled_s_cum = csv::parse_double(f[col[8]]);
        r.wall_ms = csv::parse_double(f[col[9]]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string ledger_json_text(const cost::CostLedger& ledger) {
    json j;
    j["bytes_per_param"] = ledger.convention().bytes_per_param;
    j["bytes_per_mb"] = ledger.convention().bytes_per_mb;
    j["comm_bytes"] = ledger.comm_bytes();
    j["comm_mb"] = cost::comm_cost_mb(ledger.rounds(), ledger.convention());
    j["energy_j"] = ledger.energy_j();
    j["modeled_compute_s"] = ledger.modeled_compute_s();
    j["stations"] = json::array();
    for (std::size_t u = 0; u < ledger.profiles().size(); ++u) {
        const auto& p = ledger.profiles()[u];
        j["stations"].push_back({{"station", u},
                                 {"cycles_per_bit", p.cycles_per_bit},
                                 {"cpu_freq_hz", p.cpu_freq_hz},
                                 {"capacitance", p.capacitance},
                                 {"shard_bits", p.shard_bits},
                                 {"iterations", ledger.iterations()[u]},
                                 {"energy_j", ledger.station_energy_j(u)},
                                 {"compute_s", ledger.station_compute_s(u)}});
    }
    j["rounds"] = json::array();
    for (std::size_t t = 0; t < ledger.rounds().size(); ++t) {
        const auto& r = ledger.rounds()[t];
        j["rounds"].push_back({{"round", t + 1},
                               {"participants", r.participants},
                               {"roster", r.roster},
                               {"model_params", r.model_params},
                               {"bytes", cost::round_bytes(r, ledger.convention())},
                               {"compute_s", ledger.round_compute_s()[t]},
                               {"wall_ms", ledger.round_wall_ms()[t]}});
    }
    return j.dump(2) + "\n";
}

void write_ledger_rounds_csv(std::ostream& out, const std::vector<sim::RoundMetrics>& rounds) {
    csv::write_row(out, {"round", "comm_bytes_cum", "energy_j_cum", "modeled_s_cum", "wall_ms_cum"});
    double wall = 0.0;
    for (const auto& r : rounds) {
        wall += r.wall_ms;
        csv::write_row(out, {std::to_string(r.round), std::to_string(r.comm_bytes_cum), csv::format_double(r.energy_j_cum),
                             csv::format_double(r.modeled_s_cum), csv::format_double(wall)});
    }
}

LedgerSummary read_ledger_json(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    LedgerSummary s;
    try {
        s.convention.bytes_per_param = j.at("bytes_per_param").get<std::uint64_t>();
        s.convention.bytes_per_mb = j.at("bytes_per_mb").get<std::uint64_t>();
        s.comm_bytes = j.at("comm_bytes").get<std::uint64_t>();
        s.energy_j = j.at("energy_j").get<double>();
        s.modeled_compute_s = j.at("modeled_compute_s").get<double>();
        for (const auto& r : j.at("rounds"))
            s.rounds.push_back({r.at("participants").get<std::uint64_t>(), r.at("roster").get<std::uint64_t>(),
                                r.at("model_params").get<std::uint64_t>()});
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return s;
}

BaselineSummary summarize(const std::string& baseline, const std::vector<MetricsRow>& rows,
                          const LedgerSummary& ledger, const std::map<std::string, double>& kappa) {
    BaselineSummary s;
    s.baseline = baseline;
    s.modeled_compute_s = ledger.modeled_compute_s;
    s.total_energy_j = ledger.energy_j;
    s.total_comm_mb = cost::comm_cost_mb(ledger.rounds, ledger.convention);

    std::vector<std::string> order;
    std::map<std::string, std::vector<const MetricsRow*>> test_rows;
    for (const auto& r : rows) {
        if (r.split != "test") continue;
        if (!test_rows.contains(r.task_id)) order.push_back(r.task_id);
        test_rows[r.task_id].push_back(&r);
        s.rounds = std::max(s.rounds, r.round);
        s.final_total_global_loss = r.total_global_loss;
    }
    for (const auto& id : order) {
        const auto& series = test_rows[id];
        TaskSummary ts;
        ts.task_id = id;
        std::vector<double> acc;
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (series[i]->round != i + 1) throw DataError("metrics for task '" + id + "' are not consecutive rounds");
            acc.push_back(series[i]->accuracy);
        }
        ts.final_accuracy = acc.empty() ? 0.0 : acc.back();
        if (const auto k = kappa.find(id); k != kappa.end()) {
            ts.kappa = k->second;
            if (acc.size() > ledger.rounds.size())
                throw DataError("baseline '" + baseline + "': metrics cover more rounds than the ledger");
            if (const auto hit = cost::comm_cost_to_accuracy(acc, ledger.rounds, ledger.convention, k->second)) {
                ts.rounds_to_kappa = hit->round;
                ts.comm_mb_to_kappa = hit->megabytes;
                ts.energy_j_to_kappa = series[hit->round - 1]->energy_j_cum;
            }
        }
        s.tasks.push_back(std::move(ts));
    }
    return s;
}

ComparisonReport build_report(const std::filesystem::path& run_dir, const std::map<std::string, double>& kappa) {
    const auto config_path = run_dir / "config.json";
    if (!std::filesystem::exists(config_path)) throw DataError("no run found: " + config_path.string() + " is missing");
    const auto cfg = load_config(config_path);
    ComparisonReport r;
    r.kappa = cfg.targets;
    for (const auto& [k, v] : kappa) r.kappa[k] = v;
    for (const auto& name : cfg.baselines) {
        const auto dir = run_dir / parse_baseline(name).dir_name();
        if (!std::filesystem::exists(dir / "metrics.csv"))
            throw DataError("missing run for baseline '" + name + "': " + (dir / "metrics.csv").string());
        r.baselines.push_back(
            summarize(name, read_metrics_csv(dir / "metrics.csv"), read_ledger_json(dir / "ledger.json"), r.kappa));
    }
    return r;
}

std::string report_text(const ComparisonReport& r) {
    std::ostringstream out;
    out << "kappa:";
    if (r.kappa.empty()) out << " (none)";
    for (const auto& [k, v] : r.kappa) out << ' ' << k << '=' << csv::format_double(v);
    out << "\n\n";
    out << "baseline,task,kappa,rounds_to_kappa,comm_mb_to_kappa,energy_j_to_kappa,final_accuracy\n";
    for (const auto& b : r.baselines) {
        for (const auto& t : b.tasks) {
            csv::write_row(out, {b.baseline, t.task_id, t.kappa ? csv::format_double(*t.kappa) : "-",
                                 t.kappa ? (t.rounds_to_kappa ? std::to_string(*t.rounds_to_kappa) : "not reached") : "-",
                                 t.kappa ? cell(t.comm_mb_to_kappa) : "-", t.kappa ? cell(t.energy_j_to_kappa) : "-",
                                 csv::format_double(t.final_accuracy)});
        }
    }
    out << "\nbaseline,rounds,final_total_global_loss,total_comm_mb,total_energy_j,modeled_compute_s\n";
    for (const auto& b : r.baselines) {
        csv::write_row(out, {b.baseline, std::to_string(b.rounds), csv::format_double(b.final_total_global_loss),
                             csv::format_double(b.total_comm_mb), csv::format_double(b.total_energy_j),
                             csv::format_double(b.modeled_compute_s)});
    }
    return out.str();
}

std::string report_json_text(const ComparisonReport& r) {
    auto opt = [](const auto& v) -> json { return v ? json(*v) : json(nullptr); };
    json j;
    j["kappa"] = r.kappa;
    j["baselines"] = json::array();
    for (const auto& b : r.baselines) {
        json tasks = json::array();
        for (const auto& t : b.tasks)
            tasks.push_back({{"task_id", t.task_id},
                             {"kappa", opt(t.kappa)},
                             {"rounds_to_kappa", opt(t.rounds_to_kappa)},
                             {"comm_mb_to_kappa", opt(t.comm_mb_to_kappa)},
                             {"energy_j_to_kappa", opt(t.energy_j_to_kappa)},
                             {"final_accuracy", t.final_accuracy}});
        j["baselines"].push_back({{"baseline", b.baseline},
                                  {"rounds", b.rounds},
                                  {"tasks", tasks},
                                  {"final_total_global_loss", b.final_total_global_loss},
                                  {"total_comm_mb", b.total_comm_mb},
                                  {"total_energy_j", b.total_energy_j},
                                  {"modeled_compute_s", b.modeled_compute_s}});
    }
    return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> write_plot_csvs(const std::filesystem::path& run_dir,
                                                   const std::filesystem::path& out_dir) {
    const auto cfg = load_config(run_dir / "config.json");
    std::vector<std::string> names;
    std::vector<std::vector<MetricsRow>> runs;
    for (const auto& name : cfg.baselines) {
        names.push_back(name);
        runs.push_back(read_metrics_csv(run_dir / parse_baseline(name).dir_name() / "metrics.csv"));
    }
    std::size_t rounds = 0;
    for (const auto& rows : runs)
        for (const auto& r : rows) rounds = std::max(rounds, r.round);

    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::filesystem::path& path, auto value_of) {
        std::vector<std::vector<std::string>> grid(rounds, std::vector<std::string>(names.size()));
        for (std::size_t b = 0; b < runs.size(); ++b)
            for (const auto& r : runs[b])
                if (auto v = value_of(r)) grid[r.round - 1][b] = csv::format_double(*v);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write " + path.string());
        std::vector<std::string> header{"round"};
        header.insert(header.end(), names.begin(), names.end());
        csv::write_row(out, header);
        for (std::size_t t = 0; t < rounds; ++t) {
            std::vector<std::string> row{std::to_string(t + 1)};
            row.insert(row.end(), grid[t].begin(), grid[t].end());
            csv::write_row(out, row);
        }
        written.push_back(path);
    };
    for (const auto& task : cfg.tasks) {
        emit(out_dir / ("accuracy_" + task.id + ".csv"), [&](const MetricsRow& r) -> std::optional<double> {
            if (r.split == "test" && r.task_id == task.id) return r.accuracy;
            return std::nullopt;
        });
    }
    emit(out_dir / "global_loss.csv", [&](const MetricsRow& r) -> std::optional<double> {
        if (r.split == "test") return r.total_global_loss;
        return std::nullopt;
    });
    return written;
}

}  // namespace fedaux::report
