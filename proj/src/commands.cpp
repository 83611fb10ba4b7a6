#include "fedaux/commands.hpp"

#include <exception>
#include <fstream>
#include <ostream>
#include <thread>

#include "fedaux/errors.hpp"
#include "fedaux/report.hpp"

namespace fedaux::cli {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw DataError("cannot write " + path.string());
}

std::filesystem::path make_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
    return dir;
}

void print_shards(const PreparedData& p, std::ostream& log) {
    log << "station,size";
    for (const auto& c : p.dataset.class_names) log << ',' << c;
    log << '\n';
    for (std::size_t u = 0; u < p.plan.shards.size(); ++u) {
        std::vector<std::size_t> hist(p.dataset.class_names.size(), 0);
        for (auto i : p.plan.shards[u]) ++hist[static_cast<std::size_t>(p.dataset.samples[i].main_label)];
        log << u << ',' << p.plan.shards[u].size();
        for (auto h : hist) log << ',' << h;
        log << '\n';
    }
}

void write_baseline(const std::filesystem::path& dir, const ExperimentResult& res, bool with_validation) {
    make_dir(dir);
    std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
    if (!metrics) throw DataError("cannot write " + (dir / "metrics.csv").string());
    report::write_metrics_csv(metrics, report::to_rows(res.rounds, with_validation));
    metrics.close();
    write_text(dir / "ledger.json", report::ledger_json_text(res.ledger));
    std::ofstream per_round(dir / "ledger_rounds.csv", std::ios::binary);
    if (!per_round) throw DataError("cannot write " + (dir / "ledger_rounds.csv").string());
    report::write_ledger_rounds_csv(per_round, res.rounds);
    nn::save_params(dir / "params.bin", res.final_params);
}

}  // namespace

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    return out;
}

ExperimentConfig resolve_config(const RunOptions& opts) {
    auto cfg = load_config(opts.config);
    if (!cfg.dataset.csv_path.empty() && std::filesystem::path(cfg.dataset.csv_path).is_relative())
        cfg.dataset.csv_path = (opts.config.parent_path() / cfg.dataset.csv_path).lexically_normal().string();
    if (opts.out) cfg.output_dir = opts.out->string();
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.baselines) cfg.baselines = *opts.baselines;
    validate(cfg);
    return cfg;
}

void cmd_partition(const RunOptions& opts, std::ostream& log) {
    const auto cfg = resolve_config(opts);
    const auto prepared = prepare_data(cfg);
    const auto dir = make_dir(cfg.output_dir);
    write_text(dir / "partition.json", partition_manifest_json(cfg, prepared));
    print_shards(prepared, log);
    log << "wrote " << (dir / "partition.json").string() << '\n';
}

void cmd_train(const RunOptions& opts, std::ostream& log) {
    const auto cfg = resolve_config(opts);
    const auto prepared = prepare_data(cfg);
    const auto dir = make_dir(cfg.output_dir);
    write_text(dir / "config.json", config_to_json_text(cfg));
    write_text(dir / "partition.json", partition_manifest_json(cfg, prepared));
    print_shards(prepared, log);

    std::vector<Baseline> baselines;
    for (const auto& name : cfg.baselines) baselines.push_back(parse_baseline(name));
    const bool with_validation = !prepared.split.validation.empty();

    auto run_one = [&](const Baseline& b) {
        const auto res = run_experiment(cfg, prepared, b);
        write_baseline(dir / b.dir_name(), res, with_validation);
        return res;
    };
    auto summary = [&](const ExperimentResult& res) {
        const auto& last = res.rounds.back();
        log << res.baseline.name() << ": " << res.param_count << " params, " << res.rounds.size() << " rounds";
        for (const auto& t : last.tasks) log << ", " << t.task_id << " test acc " << t.test.accuracy;
        log << ", global loss " << last.total_global_loss << '\n';
    };

    if (!opts.parallel_baselines) {
        for (const auto& b : baselines) {
            log << "training " << b.name() << '\n' << std::flush;
            summary(run_one(b));
        }
        return;
    }
    std::vector<std::optional<ExperimentResult>> results(baselines.size());
    std::vector<std::exception_ptr> errors(baselines.size());
    {
        std::vector<std::jthread> workers;
        for (std::size_t i = 0; i < baselines.size(); ++i) {
            workers.emplace_back([&, i] {
                try {
                    results[i] = run_one(baselines[i]);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        }
    }
    for (std::size_t i = 0; i < baselines.size(); ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        summary(*results[i]);
    }
}

void cmd_report(const std::filesystem::path& run_dir, const std::optional<std::filesystem::path>& out_dir,
                const std::map<std::string, double>& kappa, std::ostream& log) {
    const auto r = report::build_report(run_dir, kappa);
    const auto dir = make_dir(out_dir ? *out_dir : run_dir);
    const auto text = report::report_text(r);
    write_text(dir / "report.txt", text);
    write_text(dir / "report.json", report::report_json_text(r));
    report::write_plot_csvs(run_dir, dir);
    log << text;
}

int guarded(const std::function<void()>& body, std::ostream& err) {
    try {
        body();
        return kOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "I/O error: " << e.what() << '\n';
        return kDataError;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    }
}

}  // namespace fedaux::cli
