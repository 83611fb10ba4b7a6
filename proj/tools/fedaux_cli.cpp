#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "fedaux/commands.hpp"
#include "fedaux/csv.hpp"
#include "fedaux/errors.hpp"

using namespace fedaux;

namespace {

void add_run_options(CLI::App* cmd, cli::RunOptions& opts, std::string& out, std::uint64_t& seed,
                     std::string& baselines) {
    cmd->add_option("--config", opts.config, "experiment config (JSON)")->required();
    cmd->add_option("--out", out, "output directory (overrides output_dir)");
    cmd->add_option("--seed", seed, "seed (overrides the config)");
    cmd->add_option("--baselines", baselines, "comma separated baseline list");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated multi-task learning simulator"};
    app.require_subcommand(1);

    cli::RunOptions opts;
    std::string out, baselines;
    std::uint64_t seed = 0;

    auto* partition = app.add_subcommand("partition", "split and partition the dataset, write partition.json");
    add_run_options(partition, opts, out, seed, baselines);

    auto* train = app.add_subcommand("train", "run the configured baselines");
    add_run_options(train, opts, out, seed, baselines);
    train->add_flag("--parallel", opts.parallel_baselines, "run baselines concurrently");

    auto* report = app.add_subcommand("report", "compare the baselines of a finished run");
    std::string run_dir;
    std::vector<std::string> kappa_args;
    report->add_option("--run", run_dir, "run directory written by train")->required();
    report->add_option("--out", out, "where to write the report (default: the run directory)");
    report->add_option("--kappa", kappa_args, "accuracy target as task=value (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kConfigError;
    }

    if (!out.empty()) opts.out = out;
    if (partition->parsed() || train->parsed()) {
        if (partition->count("--seed") || train->count("--seed")) opts.seed = seed;
        if (!baselines.empty()) opts.baselines = cli::split_list(baselines);
    }

    return cli::guarded(
        [&] {
            if (partition->parsed()) {
                cli::cmd_partition(opts, std::cout);
            } else if (train->parsed()) {
                cli::cmd_train(opts, std::cout);
            } else {
                std::map<std::string, double> kappa;
                for (const auto& arg : kappa_args) {
                    const auto eq = arg.find('=');
                    if (eq == std::string::npos || eq == 0) throw ConfigError("--kappa expects task=value, got '" + arg + "'");
                    double v = 0.0;
                    try {
                        v = csv::parse_double(arg.substr(eq + 1));
                    } catch (const DataError&) {
                        throw ConfigError("--kappa value is not a number: '" + arg + "'");
                    }
                    if (!(v > 0.0 && v < 1.0)) throw ConfigError("--kappa must lie in (0,1): '" + arg + "'");
                    kappa[arg.substr(0, eq)] = v;
                }
                cli::cmd_report(run_dir, opts.out, kappa, std::cout);
            }
        },
        std::cerr);
}
