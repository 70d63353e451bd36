#pragma once

#include "fgancd/admg.hpp"
#include "fgancd/pag.hpp"
#include "fgancd/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fgancd {

// The two benchmark ground truths shipped with the project (also available
// as edge-list fixtures under data/).
Admg case_study_graph(char case_id);  // 'A' or 'B'

struct SeedOutcome {
    int seed_index = 0;
    int shd = 0;
    double skeleton_f1 = 0.0;
    double arrowhead_f1 = 0.0;
    bool edge_0_3_absent = false;  // meaningful for case B
    Admg graph;
    int repaired_edges = 0;
    long jitter_events = 0;
};

struct ExperimentReport {
    char case_id = 'A';
    int n_samples = 0;
    std::uint64_t base_seed = 0;
    TrainConfig config;
    std::vector<SeedOutcome> seeds;

    double shd_mean = 0.0, shd_std = 0.0;
    double skeleton_f1_mean = 0.0, skeleton_f1_std = 0.0;
    double arrowhead_f1_mean = 0.0, arrowhead_f1_std = 0.0;
    double edge_0_3_absent_fraction = 0.0;
};

// Per seed: resample ground-truth weights, simulate n samples, train,
// extract, convert both graphs to PAGs, score. Seeds are independent and may
// run on up to `jobs` threads; the report is identical regardless of the
// thread count.
ExperimentReport run_reproduction(char case_id, int seed_count, const TrainConfig& base,
                                  int n_samples, std::uint64_t base_seed, int jobs);

// Sorted-key JSON rendering of a report; byte-stable across runs.
std::string report_to_json(const ExperimentReport& report);

// Flat `key = value` config file mirroring TrainConfig; `#` starts a
// comment. Unknown keys are fatal (ConfigError listing them).
TrainConfig parse_train_config(const std::string& text);
std::string train_config_keys_help();

// Scoring used both by the harness and the evaluate command.
struct PagMetrics {
    int shd = 0;
    double skeleton_f1 = 0.0;
    double arrowhead_f1 = 0.0;
};
PagMetrics score_pags(const Pag& est, const Pag& truth);

}  // namespace fgancd
