#include "fgancd/experiment.hpp"

#include "fgancd/errors.hpp"
#include "fgancd/rng.hpp"
#include "fgancd/simulator.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace fgancd {

Admg case_study_graph(char case_id) {
    Admg g = Admg::empty(4);
    if (case_id == 'A') {
        g.set_dir(2, 1);
        g.set_dir(2, 3);
        g.set_dir(0, 3);
        g.set_dir(3, 1);
        g.set_bi(0, 1);
    } else if (case_id == 'B') {
        g.set_dir(0, 2);
        g.set_bi(0, 1);
        g.set_bi(1, 2);
        g.set_bi(1, 3);
        g.set_bi(2, 3);
    } else {
        throw ConfigError(std::string("unknown case study `") + case_id + "`");
    }
    return g;
}

PagMetrics score_pags(const Pag& est, const Pag& truth) {
    return {shd(est, truth), skeleton_f1(est, truth), arrowhead_f1(est, truth)};
}

namespace {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(var / xs.size());
    return out;
}

SeedOutcome run_one_seed(char case_id, int seed_index, const TrainConfig& base, int n_samples,
                         std::uint64_t base_seed, const Pag& truth_pag) {
    const Admg truth = case_study_graph(case_id);
    const std::uint64_t weight_seed = mix_seed(base_seed, seed_index, 1);
    const std::uint64_t data_seed = mix_seed(base_seed, seed_index, 2);
    const std::uint64_t train_seed = mix_seed(base_seed, seed_index, 3);

    const WeightedSem sem = sample_ground_truth(truth, weight_seed);
    const Dataset data = simulate(sem, n_samples, data_seed);

    TrainConfig cfg = base;
    cfg.seed = train_seed;
    const TrainResult trained = train(data, cfg);
    const ExtractionResult extracted = extract_structure(trained.generator, cfg.delta);
    const Pag est_pag = fci_oracle(extracted.graph);
    const PagMetrics metrics = score_pags(est_pag, truth_pag);

    SeedOutcome out;
    out.seed_index = seed_index;
    out.shd = metrics.shd;
    out.skeleton_f1 = metrics.skeleton_f1;
    out.arrowhead_f1 = metrics.arrowhead_f1;
    out.edge_0_3_absent = !est_pag.adjacent(0, 3);
    out.graph = extracted.graph;
    out.repaired_edges = extracted.repaired_edges;
    for (const EpochStats& e : trained.history.epochs) out.jitter_events += e.jitter_events;
    return out;
}

}  // namespace

ExperimentReport run_reproduction(char case_id, int seed_count, const TrainConfig& base,
                                  int n_samples, std::uint64_t base_seed, int jobs) {
    if (seed_count < 1) throw ConfigError("reproduce: seeds must be >= 1");
    if (n_samples < base.batch_size) {
        throw ConfigError("reproduce: sample count below batch size");
    }
    base.validate();
    const Pag truth_pag = fci_oracle(case_study_graph(case_id));

    ExperimentReport report;
    report.case_id = case_id;
    report.n_samples = n_samples;
    report.base_seed = base_seed;
    report.config = base;
    report.seeds.resize(seed_count);

    const int workers = std::max(1, std::min(jobs, seed_count));
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> failures(seed_count);
    auto worker = [&]() {
        for (;;) {
            const int idx = next.fetch_add(1);
            if (idx >= seed_count) return;
            try {
                report.seeds[idx] =
                    run_one_seed(case_id, idx, base, n_samples, base_seed, truth_pag);
            } catch (...) {
                failures[idx] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (int idx = 0; idx < seed_count; ++idx) {
        if (!failures[idx]) continue;
        try {
            std::rethrow_exception(failures[idx]);
        } catch (const ValidationError& e) {
            throw ValidationError("seed " + std::to_string(idx) + ": " + e.what());
        } catch (const std::exception& e) {
            throw NumericError("seed " + std::to_string(idx) + ": " + e.what());
        }
    }

    std::vector<double> shds, skels, arrows;
    int absent = 0;
    for (const SeedOutcome& s : report.seeds) {
        shds.push_back(static_cast<double>(s.shd));
        skels.push_back(s.skeleton_f1);
        arrows.push_back(s.arrowhead_f1);
        absent += s.edge_0_3_absent;
    }
    const MeanStd shd_ms = mean_std(shds);
    const MeanStd skel_ms = mean_std(skels);
    const MeanStd arrow_ms = mean_std(arrows);
    report.shd_mean = shd_ms.mean;
    report.shd_std = shd_ms.std;
    report.skeleton_f1_mean = skel_ms.mean;
    report.skeleton_f1_std = skel_ms.std;
    report.arrowhead_f1_mean = arrow_ms.mean;
    report.arrowhead_f1_std = arrow_ms.std;
    report.edge_0_3_absent_fraction = static_cast<double>(absent) / seed_count;
    return report;
}

namespace {

nlohmann::json config_to_json(const TrainConfig& cfg) {
    return {
        {"anneal", cfg.anneal},
        {"batch_size", cfg.batch_size},
        {"delta", cfg.delta},
        {"epochs", cfg.epochs},
        {"eta_d", cfg.eta_d},
        {"eta_g", cfg.eta_g},
        {"lambda_acyc", cfg.lambda_acyc},
        {"d_steps", cfg.d_steps},
        {"draws", cfg.draws},
        {"optimizer", cfg.plain_sgd ? "sgd" : "adam"},
        {"tau_end", cfg.tau_end},
        {"tau_start", cfg.tau_start},
    };
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
    nlohmann::json aggregate = {
        {"arrowhead_f1_mean", report.arrowhead_f1_mean},
        {"arrowhead_f1_std", report.arrowhead_f1_std},
        {"shd_mean", report.shd_mean},
        {"shd_std", report.shd_std},
        {"skeleton_f1_mean", report.skeleton_f1_mean},
        {"skeleton_f1_std", report.skeleton_f1_std},
    };
    if (report.case_id == 'B') {
        aggregate["edge_0_3_absent_fraction"] = report.edge_0_3_absent_fraction;
    }
    nlohmann::json seeds = nlohmann::json::array();
    for (const SeedOutcome& s : report.seeds) {
        nlohmann::json row = {
            {"arrowhead_f1", s.arrowhead_f1},
            {"graph", serialize_edge_list(s.graph)},
            {"jitter_events", s.jitter_events},
            {"repaired_edges", s.repaired_edges},
            {"seed_index", s.seed_index},
            {"shd", s.shd},
            {"skeleton_f1", s.skeleton_f1},
        };
        if (report.case_id == 'B') row["edge_0_3_absent"] = s.edge_0_3_absent;
        seeds.push_back(std::move(row));
    }
    nlohmann::json config = config_to_json(report.config);
    config["base_seed"] = report.base_seed;
    config["n_samples"] = report.n_samples;
    config["seed_count"] = static_cast<int>(report.seeds.size());
    nlohmann::json root = {
        {"aggregate", std::move(aggregate)},
        {"case", std::string(1, report.case_id)},
        {"config", std::move(config)},
        {"seeds", std::move(seeds)},
    };
    return root.dump(2) + "\n";
}

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::string> unknown;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        std::istringstream probe(line);
        std::string first;
        if (!(probe >> first)) continue;
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected `key = value`");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
        };
        trim(key);
        trim(value);
        if (key.empty() || value.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected `key = value`");
        }
        auto parse_int = [&](int& slot) {
            try {
                slot = std::stoi(value);
            } catch (...) {
                throw ConfigError("line " + std::to_string(lineno) + ": bad integer `" + value +
                                  "` for " + key);
            }
        };
        auto parse_double = [&](double& slot) {
            try {
                slot = std::stod(value);
            } catch (...) {
                throw ConfigError("line " + std::to_string(lineno) + ": bad number `" + value +
                                  "` for " + key);
            }
        };
        if (key == "epochs") {
            parse_int(cfg.epochs);
        } else if (key == "batch_size") {
            parse_int(cfg.batch_size);
        } else if (key == "eta_g") {
            parse_double(cfg.eta_g);
        } else if (key == "eta_d") {
            parse_double(cfg.eta_d);
        } else if (key == "lambda_acyc") {
            parse_double(cfg.lambda_acyc);
        } else if (key == "tau_start") {
            parse_double(cfg.tau_start);
        } else if (key == "tau_end") {
            parse_double(cfg.tau_end);
        } else if (key == "anneal") {
            cfg.anneal = value;
        } else if (key == "delta") {
            parse_double(cfg.delta);
        } else if (key == "seed") {
            try {
                cfg.seed = std::stoull(value);
            } catch (...) {
                throw ConfigError("line " + std::to_string(lineno) + ": bad seed `" + value + "`");
            }
        } else if (key == "draws") {
            cfg.draws = value;
        } else if (key == "d_steps") {
            parse_int(cfg.d_steps);
        } else if (key == "optimizer") {
            if (value == "adam") {
                cfg.plain_sgd = false;
            } else if (value == "sgd") {
                cfg.plain_sgd = true;
            } else {
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": optimizer must be adam or sgd");
            }
        } else {
            unknown.push_back(key);
        }
    }
    if (!unknown.empty()) {
        std::string joined;
        for (const auto& k : unknown) {
            if (!joined.empty()) joined += ", ";
            joined += k;
        }
        throw ConfigError("unknown config keys: " + joined + "; known keys are " +
                          train_config_keys_help());
    }
    cfg.validate();
    return cfg;
}

std::string train_config_keys_help() {
    return "epochs, batch_size, eta_g, eta_d, lambda_acyc, tau_start, tau_end, anneal, delta, "
           "seed, optimizer, d_steps, draws";
}

}  // namespace fgancd
