#include "fgancd/admg.hpp"
#include "fgancd/errors.hpp"
#include "fgancd/experiment.hpp"
#include "fgancd/pag.hpp"
#include "fgancd/simulator.hpp"
#include "fgancd/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw fgancd::ValidationError("cannot open `" + path + "` for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    const fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw fgancd::ValidationError("cannot create directory `" +
                                              p.parent_path().string() + "`");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw fgancd::ValidationError("cannot open `" + path + "` for writing");
    out << content;
    if (!out) throw fgancd::ValidationError("write to `" + path + "` failed");
}

json matrix_rows_json(const fgancd::Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_history_csv(const fgancd::TrainHistory& history) {
    std::ostringstream out;
    out << "epoch,L_G,L_D,penalty,tau,jitter_events\n";
    char buf[64];
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        const auto& row = history.epochs[e];
        out << e;
        for (double v : {row.loss_g, row.loss_d, row.penalty, row.tau}) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << "," << buf;
        }
        out << "," << row.jitter_events << "\n";
    }
    return out.str();
}

std::string logits_to_json(const fgancd::GeneratorParams& params) {
    json root;
    json a_b = json::array();
    json a_sigma = json::array();
    for (int i = 0; i < params.logits_directed.size(); ++i) {
        a_b.push_back(params.logits_directed.data()[i]);
    }
    for (int i = 0; i < params.logits_bidirected.size(); ++i) {
        a_sigma.push_back(params.logits_bidirected.data()[i]);
    }
    root["A_B"] = std::move(a_b);
    root["A_Sigma"] = std::move(a_sigma);
    root["d"] = params.d;
    return root.dump(2) + "\n";
}

fgancd::GeneratorParams logits_from_json(const std::string& text, const std::string& path) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw fgancd::SyntaxError("`" + path + "`: " + e.what());
    }
    if (!root.contains("d") || !root.contains("A_B") || !root.contains("A_Sigma")) {
        throw fgancd::SyntaxError("`" + path + "`: expected keys d, A_B, A_Sigma");
    }
    const int d = root["d"].get<int>();
    fgancd::GeneratorParams params = fgancd::make_generator(d);
    const auto& a_b = root["A_B"];
    const auto& a_sigma = root["A_Sigma"];
    if (static_cast<int>(a_b.size()) != d * d || static_cast<int>(a_sigma.size()) != d * d) {
        throw fgancd::SyntaxError("`" + path + "`: logit arrays must hold d*d values");
    }
    for (int i = 0; i < d * d; ++i) {
        params.logits_directed.data()[i] = a_b[i].get<double>();
        params.logits_bidirected.data()[i] = a_sigma[i].get<double>();
    }
    return params;
}

std::string metrics_to_json(const fgancd::PagMetrics& m) {
    json root = {
        {"arrowhead_f1", m.arrowhead_f1},
        {"shd", m.shd},
        {"skeleton_f1", m.skeleton_f1},
    };
    return root.dump(2) + "\n";
}

int default_jobs() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fgancd: adversarial structure learning for linear SEMs with confounding"};
    app.require_subcommand(1);

    // --- simulate ---
    auto* sim = app.add_subcommand("simulate", "draw SEM weights for a graph and sample a dataset");
    std::string sim_graph, sim_out;
    int sim_n = 2000;
    std::uint64_t sim_seed = 1;
    sim->add_option("--graph", sim_graph, "ground-truth edge-list file")->required();
    sim->add_option("--n", sim_n, "sample count");
    sim->add_option("--seed", sim_seed, "rng seed");
    sim->add_option("--out", sim_out, "output CSV path")->required();
    sim->callback([&] {
        if (sim_n < 1) throw fgancd::ConfigError("simulate: --n must be >= 1");
        const fgancd::Admg g = fgancd::parse_edge_list(read_file(sim_graph));
        const fgancd::WeightedSem sem = fgancd::sample_ground_truth(g, sim_seed);
        const fgancd::Dataset ds = fgancd::simulate(sem, sim_n, sim_seed + 1);
        write_file(sim_out, fgancd::write_csv(ds));
        json truth = {
            {"B", matrix_rows_json(sem.coefs)},
            {"Sigma", matrix_rows_json(sem.noise_cov)},
            {"d", g.d},
            {"seed", sim_seed},
        };
        const fs::path sidecar = fs::path(sim_out).parent_path() / "truth.json";
        write_file(sidecar.string(), truth.dump(2) + "\n");
        std::cout << "wrote " << ds.n << "x" << ds.d << " dataset to " << sim_out << "\n";
    });

    // --- train ---
    auto* tr = app.add_subcommand("train", "run the adversarial training loop on a dataset");
    std::string tr_data, tr_config, tr_out;
    tr->add_option("--data", tr_data, "input CSV dataset")->required();
    tr->add_option("--config", tr_config, "key = value config file (defaults when omitted)");
    tr->add_option("--out", tr_out, "run directory")->required();
    tr->callback([&] {
        const fgancd::Dataset ds = fgancd::read_csv(read_file(tr_data));
        fgancd::TrainConfig cfg;
        if (!tr_config.empty()) cfg = fgancd::parse_train_config(read_file(tr_config));
        const fgancd::TrainResult result = fgancd::train(ds, cfg);
        const fgancd::ExtractionResult extracted =
            fgancd::extract_structure(result.generator, cfg.delta);
        const fs::path dir(tr_out);
        write_file((dir / "logits.json").string(), logits_to_json(result.generator));
        write_file((dir / "history.csv").string(), format_history_csv(result.history));
        write_file((dir / "extracted.edges").string(),
                   fgancd::serialize_edge_list(extracted.graph));
        std::cout << "trained " << cfg.epochs << " epochs; extracted "
                  << extracted.graph.directed_edge_count() << " directed and "
                  << extracted.graph.bidirected_edge_count() << " bidirected edges ("
                  << extracted.repaired_edges << " repaired)\n";
    });

    // --- extract ---
    auto* ex = app.add_subcommand("extract", "threshold trained logits into a graph");
    std::string ex_logits, ex_out;
    double ex_delta = 0.5;
    ex->add_option("--logits", ex_logits, "logits.json from a run directory")->required();
    ex->add_option("--delta", ex_delta, "threshold in (0,1)");
    ex->add_option("--out", ex_out, "output edge-list file")->required();
    ex->callback([&] {
        const fgancd::GeneratorParams params = logits_from_json(read_file(ex_logits), ex_logits);
        const fgancd::ExtractionResult extracted = fgancd::extract_structure(params, ex_delta);
        write_file(ex_out, fgancd::serialize_edge_list(extracted.graph));
        std::cout << "extracted " << extracted.graph.directed_edge_count() << " directed and "
                  << extracted.graph.bidirected_edge_count() << " bidirected edges ("
                  << extracted.repaired_edges << " repaired)\n";
    });

    // --- pag ---
    auto* pg = app.add_subcommand("pag", "convert a graph to its partial ancestral graph");
    std::string pg_graph, pg_out;
    pg->add_option("--graph", pg_graph, "input edge-list file")->required();
    pg->add_option("--out", pg_out, "output PAG file")->required();
    pg->callback([&] {
        const fgancd::Admg g = fgancd::parse_edge_list(read_file(pg_graph));
        const fgancd::Pag p = fgancd::fci_oracle(g);
        write_file(pg_out, fgancd::serialize_pag(p));
        std::cout << "wrote PAG with " << p.edge_count() << " edges to " << pg_out << "\n";
    });

    // --- evaluate ---
    auto* ev = app.add_subcommand("evaluate", "score an estimated graph against a ground truth");
    std::string ev_truth, ev_est, ev_out;
    ev->add_option("--truth", ev_truth, "ground-truth edge-list file")->required();
    ev->add_option("--est", ev_est, "estimated edge-list file")->required();
    ev->add_option("--out", ev_out, "metrics JSON path (stdout when omitted)");
    ev->callback([&] {
        const fgancd::Admg truth = fgancd::parse_edge_list(read_file(ev_truth));
        const fgancd::Admg est = fgancd::parse_edge_list(read_file(ev_est));
        if (truth.d != est.d) {
            throw fgancd::DimensionMismatch("evaluate: graphs have " + std::to_string(truth.d) +
                                            " vs " + std::to_string(est.d) + " vertices");
        }
        const fgancd::PagMetrics m =
            fgancd::score_pags(fgancd::fci_oracle(est), fgancd::fci_oracle(truth));
        const std::string text = metrics_to_json(m);
        if (ev_out.empty()) {
            std::cout << text;
        } else {
            write_file(ev_out, text);
            std::cout << text;
        }
    });

    // --- reproduce ---
    auto* rp = app.add_subcommand("reproduce", "run a case study end to end over several seeds");
    std::string rp_case, rp_out;
    int rp_seeds = 6;
    int rp_n = 2000;
    int rp_jobs = default_jobs();
    int rp_epochs = 0;
    std::uint64_t rp_seed = 1;
    rp->add_option("--case", rp_case, "case study, A or B")->required();
    rp->add_option("--seeds", rp_seeds, "number of replicate seeds");
    rp->add_option("--out", rp_out, "report JSON path (stdout when omitted)");
    rp->add_option("--seed", rp_seed, "base seed");
    rp->add_option("--jobs", rp_jobs, "worker threads across seeds");
    rp->add_option("--n", rp_n, "samples per replicate");
    rp->add_option("--epochs", rp_epochs, "override training epochs (0 = default)");
    rp->callback([&] {
        if (rp_case != "A" && rp_case != "B") {
            throw fgancd::ConfigError("reproduce: --case must be A or B");
        }
        if (rp_seeds < 1) throw fgancd::ConfigError("reproduce: --seeds must be >= 1");
        if (rp_jobs < 1) throw fgancd::ConfigError("reproduce: --jobs must be >= 1");
        fgancd::TrainConfig cfg;
        if (rp_epochs > 0) cfg.epochs = rp_epochs;
        const fgancd::ExperimentReport report =
            fgancd::run_reproduction(rp_case[0], rp_seeds, cfg, rp_n, rp_seed, rp_jobs);
        const std::string text = fgancd::report_to_json(report);
        if (rp_out.empty()) {
            std::cout << text;
        } else {
            write_file(rp_out, text);
            std::cout << "case " << rp_case << ": mean SHD " << report.shd_mean
                      << ", mean skeleton F1 " << report.skeleton_f1_mean
                      << ", mean arrowhead F1 " << report.arrowhead_f1_mean << " over "
                      << rp_seeds << " seeds -> " << rp_out << "\n";
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const fgancd::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fgancd::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
