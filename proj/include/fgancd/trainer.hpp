#pragma once

#include "fgancd/admg.hpp"
#include "fgancd/gan.hpp"
#include "fgancd/simulator.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fgancd {

struct TrainConfig {
    int epochs = 4000;
    int batch_size = 128;
    double eta_g = 5e-3;
    double eta_d = 1e-3;
    double lambda_acyc = 1.0;
    double tau_start = 1.0;
    double tau_end = 0.1;
    std::string anneal = "exponential";
    double delta = 0.5;  // extraction threshold
    std::uint64_t seed = 1;
    bool plain_sgd = false;
    int d_steps = 1;            // discriminator updates per batch iteration
    std::string draws = "batch";  // weight/structure draws per "batch" or per "sample"

    void validate() const;  // throws ConfigError
};

struct EpochStats {
    double loss_g = 0.0;       // epoch mean
    double loss_d = 0.0;       // epoch mean
    double penalty = 0.0;      // epoch mean of h(soft directed sample)
    double tau = 0.0;
    long jitter_events = 0;    // count within the epoch
    double penalty_hard = 0.0; // h of thresholded sigmoid(logits), end of epoch
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

// Geometric interpolation tau_start -> tau_end across the epoch range.
double anneal_temperature(int epoch, const TrainConfig& cfg);

// Per-step observation hook: kind is 'G' or 'D'. adversarial/penalty are
// populated for generator steps only.
struct StepEvent {
    int epoch = 0;
    int batch = 0;
    char kind = 'G';
    double loss = 0.0;
    double adversarial = 0.0;
    double penalty = 0.0;
};
using StepHook = std::function<void(const StepEvent&)>;

struct TrainResult {
    GeneratorParams generator;
    DiscriminatorParams discriminator;
    TrainHistory history;
};

// Alternating loop over shuffled full batches: generator step (adversarial
// loss plus lambda * acyclicity penalty on the soft directed sample), then a
// discriminator step on fakes regenerated with the same noise batch but
// fresh structure/weight draws. Fully deterministic given cfg.seed.
TrainResult train(const Dataset& data, const TrainConfig& cfg, const StepHook& hook = {});

// Adaptive-moment update, decay 0.5 / 0.9, epsilon 1e-8, no bias
// correction; plain SGD when requested. Throws NonFiniteGradient.
struct AdamState {
    Matrix m;
    Matrix v;
};
void gradient_step(Matrix& param, const Matrix& grad, double lr, AdamState& state,
                   bool plain_sgd = false);

// Threshold sigmoid(logits) at delta; the bidirected part comes from the
// upper triangle, mirrored. If the directed part is cyclic, the weakest edge
// on any cycle (smallest probability, lexicographic tie-break) is deleted
// until acyclic.
struct ExtractionResult {
    Admg graph;
    int repaired_edges = 0;
};
ExtractionResult extract_structure(const GeneratorParams& params, double delta);

}  // namespace fgancd
