#include "fedaux/fl_sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "fedaux/errors.hpp"

namespace fedaux::sim {

void validate(const RoundConfig& cfg) {
    if (cfg.rounds == 0) throw ConfigError("rounds must be >= 1");
    if (!(cfg.eta >= 0.0) || !std::isfinite(cfg.eta)) throw ConfigError("eta must be finite and >= 0");
    if (cfg.batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (cfg.epochs == 0) throw ConfigError("epochs must be >= 1");
    if (!(cfg.participation > 0.0 && cfg.participation <= 1.0))
        throw ConfigError("participation must lie in (0,1]");
}

std::uint64_t station_seed(std::uint64_t seed, std::size_t station, std::size_t round) {
    return derive_seed(seed, {stream::kStation, station, round});
}

std::size_t broadcast(const EdgeServer& server, std::span<BaseStation> stations) {
    std::size_t sent = 0;
    for (auto id : server.roster) {
        stations[id].params = server.global;
        ++sent;
    }
    return sent;
}

std::vector<std::size_t> select_participants(Rng& rng, std::span<const std::size_t> roster, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("participation fraction must lie in (0,1]");
    const auto want = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(roster.size()) - 1e-9));
    if (want == 0) throw ConfigError("participation rule selects no station");
    std::vector<std::size_t> chosen(roster.begin(), roster.end());
    if (want < chosen.size()) {
        std::shuffle(chosen.begin(), chosen.end(), rng);
        chosen.resize(want);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

nn::ParamVector aggregate(std::span<const StationUpdate> updates) {
    if (updates.empty()) throw InternalError("aggregate called without updates");
    const std::size_t d = updates.front().params->size();
    double total = 0.0;
    for (const auto& u : updates) {
        if (u.params->size() != d)
            throw InternalError("aggregate: update length " + std::to_string(u.params->size()) + " != " +
                                std::to_string(d));
        if (u.data_size == 0) throw InternalError("aggregate: station with no data");
        total += static_cast<double>(u.data_size);
    }
    std::vector<double> weight;
    weight.reserve(updates.size());
    for (const auto& u : updates) weight.push_back(static_cast<double>(u.data_size) / total);

    const auto ref = updates.front().params->values();
    nn::ParamVector out(d);
    for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        double lo = ref[i], hi = ref[i];
        for (std::size_t u = 1; u < updates.size(); ++u) {
            const double v = (*updates[u].params)[i];
            acc += weight[u] * (v - ref[i]);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        out[i] = std::clamp(ref[i] + acc, lo, hi);
    }
    return out;
}

double expected_composite_loss(const mtl::HardSharedModel& model, std::span<const double> params,
                               const mtl::LabeledSet& data, mtl::LossMode mode) {
    const auto eval = mtl::evaluate(model, params, data);
    std::vector<double> losses;
    for (const auto& e : eval) losses.push_back(e.loss);
    const std::size_t scope = mode == mtl::LossMode::Joint ? model.task_count() : model.aux_task_count();
    return mtl::composite_loss(model.tasks(), losses, mtl::equal_weights(scope), mode);
}

double global_loss(const mtl::HardSharedModel& model, std::span<const double> params,
                   std::span<const BaseStation> stations, mtl::LossMode mode) {
    double weighted = 0.0;
    double total = 0.0;
    for (const auto& s : stations) {
        const auto n = static_cast<double>(s.data_size());
        weighted += n * expected_composite_loss(model, params, s.shard, mode);
        total += n;
    }
    if (total == 0.0) throw ConfigError("global loss over stations without data");
    return weighted / total;
}

Simulation::Simulation(mtl::HardSharedModel model, std::vector<BaseStation> stations, nn::ParamVector initial,
                       RoundConfig cfg, cost::CostLedger ledger, mtl::LabeledSet validation, mtl::LabeledSet test)
    : model_(std::move(model)),
      stations_(std::move(stations)),
      cfg_(cfg),
      ledger_(std::move(ledger)),
      validation_(std::move(validation)),
      test_(std::move(test)) {
    validate(cfg_);
    if (stations_.empty()) throw ConfigError("simulation needs at least one station");
    if (initial.size() != model_.param_count())
        throw InternalError("initial parameters do not match the model");
    if (ledger_.profiles().size() != stations_.size())
        throw InternalError("ledger tracks " + std::to_string(ledger_.profiles().size()) + " stations, simulation has " +
                            std::to_string(stations_.size()));
    if (test_.size() == 0) throw ConfigError("simulation needs a non-empty test set");
    for (std::size_t u = 0; u < stations_.size(); ++u) {
        if (stations_[u].id != u) throw InternalError("station ids must be 0..U-1 in order");
        if (stations_[u].data_size() == 0) throw ConfigError("station " + std::to_string(u) + " has an empty shard");
        server_.roster.push_back(u);
    }
    server_.global = std::move(initial);
}

RoundMetrics Simulation::run_round() {
    if (server_.round >= cfg_.rounds) throw InternalError("all configured rounds already ran");
    const auto started = std::chrono::steady_clock::now();
    const std::size_t t = server_.round + 1;

    // Step 1
    const std::size_t downlinks = broadcast(server_, stations_);

    std::vector<std::size_t> participants;
    if (cfg_.participation >= 1.0) {
        participants = server_.roster;
    } else {
        Rng prng = make_rng(cfg_.seed, {stream::kParticipation, t});
        participants = select_participants(prng, server_.roster, cfg_.participation);
    }

    // Step 2: local training, independent per station
    const mtl::LocalTrainConfig local{cfg_.eta, cfg_.batch_size, cfg_.epochs, cfg_.strategy};
    std::vector<std::size_t> iterations(participants.size(), 0);
    std::vector<std::exception_ptr> failures(participants.size());
    auto train_one = [&](std::size_t k) {
        try {
            auto& st = stations_[participants[k]];
            Rng rng(station_seed(cfg_.seed, st.id, t));
            auto res = mtl::local_train(model_, st.params, st.shard, local, rng);
            st.params = std::move(res.params);
            iterations[k] = res.iterations;
        } catch (...) {
            failures[k] = std::current_exception();
        }
    };
    if (cfg_.parallel_stations && participants.size() > 1 && std::thread::hardware_concurrency() > 1) {
        std::vector<std::jthread> workers;
        workers.reserve(participants.size());
        for (std::size_t k = 0; k < participants.size(); ++k) workers.emplace_back(train_one, k);
    } else {
        for (std::size_t k = 0; k < participants.size(); ++k) train_one(k);
    }
    for (std::size_t k = 0; k < participants.size(); ++k) {
        if (!failures[k]) continue;
        try {
            std::rethrow_exception(failures[k]);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " at round " + std::to_string(t) + ", station " +
                                     std::to_string(participants[k]),
                                 static_cast<int>(t), static_cast<int>(participants[k]));
        }
    }

    // Step 3: collect
    double round_s = 0.0;
    std::vector<StationUpdate> updates;
    for (std::size_t k = 0; k < participants.size(); ++k) {
        const auto& st = stations_[participants[k]];
        round_s = std::max(round_s, ledger_.record_local(st.id, iterations[k]));
        updates.push_back({st.data_size(), &st.params});
    }

    // Step 4
    server_.global = aggregate(updates);
    server_.round = t;

    RoundMetrics m;
    m.round = t;
    const auto params = server_.global.values();
    const auto test_eval = mtl::evaluate(model_, params, test_);
    std::vector<mtl::TaskEvaluation> val_eval(model_.task_count());
    if (validation_.size() > 0) val_eval = mtl::evaluate(model_, params, validation_);
    for (std::size_t i = 0; i < model_.task_count(); ++i)
        m.tasks.push_back({model_.tasks()[i].id, val_eval[i], test_eval[i]});
    m.total_global_loss = global_loss(model_, params, stations_, cfg_.strategy.mode);
    if (!std::isfinite(m.total_global_loss))
        throw NumericalError("non-finite total global loss at round " + std::to_string(t), static_cast<int>(t), -1);

    double wall = 0.0;
    if (cfg_.record_wall_clock)
        wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    ledger_.record_round({participants.size(), downlinks, model_.param_count()}, round_s, wall);
    m.comm_bytes_cum = ledger_.comm_bytes();
    m.energy_j_cum = ledger_.energy_j();
    m.modeled_s_cum = ledger_.modeled_compute_s();
    m.wall_ms = wall;
    return m;
}

std::vector<RoundMetrics> Simulation::run(const MetricsSink& sink) {
    std::vector<RoundMetrics> out;
    while (server_.round < cfg_.rounds) {
        out.push_back(run_round());
        if (sink) sink(out.back());
    }
    return out;
}

}  // namespace fedaux::sim
