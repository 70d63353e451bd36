#include "fgancd/trainer.hpp"

#include "fgancd/errors.hpp"
#include "fgancd/rng.hpp"

#include <cmath>
#include <utility>

namespace fgancd {

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError(what); };
    if (epochs < 1) fail("epochs must be >= 1");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (!(eta_g > 0.0)) fail("eta_g must be positive");
    if (!(eta_d > 0.0)) fail("eta_d must be positive");
    if (lambda_acyc < 0.0) fail("lambda_acyc must be non-negative");
    if (!(tau_start > 0.0)) fail("tau_start must be positive");
    if (!(tau_end > 0.0)) fail("tau_end must be positive");
    if (tau_end > tau_start) fail("tau_end must not exceed tau_start");
    if (anneal != "exponential") fail("anneal mode must be `exponential`");
    if (!(delta > 0.0 && delta < 1.0)) fail("delta must lie in (0,1)");
    if (d_steps < 1) fail("d_steps must be >= 1");
    if (draws != "batch" && draws != "sample") fail("draws must be `batch` or `sample`");
}

double anneal_temperature(int epoch, const TrainConfig& cfg) {
    if (cfg.epochs <= 1) return cfg.tau_start;
    const double frac = static_cast<double>(epoch) / (cfg.epochs - 1);
    return cfg.tau_start * std::pow(cfg.tau_end / cfg.tau_start, frac);
}

void gradient_step(Matrix& param, const Matrix& grad, double lr, AdamState& state,
                   bool plain_sgd) {
    if (!param.same_shape(grad)) {
        throw ShapeMismatch("gradient_step: parameter/gradient shapes differ");
    }
    if (!all_finite(grad)) throw NonFiniteGradient("gradient_step: non-finite gradient");
    if (plain_sgd) {
        for (int i = 0; i < param.size(); ++i) param.data()[i] -= lr * grad.data()[i];
        return;
    }
    if (state.m.empty()) {
        state.m = Matrix(param.rows(), param.cols(), 0.0);
        state.v = Matrix(param.rows(), param.cols(), 0.0);
    }
    // beta2 must stay close to 1: with a fast second-moment decay the update
    // degenerates to sign(g) per coordinate, which follows the per-batch
    // gradient-sign frequency instead of the mean field. The structure
    // signal here lives at a per-batch SNR of a few percent, so only the
    // normalized-drift regime recovers it.
    constexpr double beta1 = 0.5;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    for (int i = 0; i < param.size(); ++i) {
        const double g = grad.data()[i];
        double& m = state.m.data()[i];
        double& v = state.v.data()[i];
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g * g;
        param.data()[i] -= lr * m / (std::sqrt(v) + eps);
    }
}

namespace {

Matrix gather_rows(const Matrix& values, const std::vector<int>& perm, int first, int count) {
    Matrix out(count, values.cols());
    for (int r = 0; r < count; ++r) {
        const int src = perm[first + r];
        for (int c = 0; c < values.cols(); ++c) out(r, c) = values(src, c);
    }
    return out;
}

Matrix threshold_sigmoid(const Matrix& logits, double delta) {
    Matrix out(logits.rows(), logits.cols(), 0.0);
    for (int i = 0; i < logits.size(); ++i) {
        out.data()[i] = stable_sigmoid(logits.data()[i]) > delta ? 1.0 : 0.0;
    }
    for (int i = 0; i < out.rows(); ++i) out(i, i) = 0.0;
    return out;
}

struct OptimizerBank {
    AdamState gen_directed, gen_bidirected;
    AdamState w1, b1, w2, b2, w3, b3;
};

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& cfg, const StepHook& hook) {
    cfg.validate();
    if (data.d < 2) throw ConfigError("train: need at least 2 variables");
    if (data.n < cfg.batch_size) throw ConfigError("train: batch_size exceeds sample count");

    const int d = data.d;
    const int k = cfg.batch_size;
    const int batches_per_epoch = data.n / k;

    Rng root(cfg.seed);
    Rng init_rng = root.derive(1);
    Rng shuffle_rng = root.derive(2);
    Rng structure_rng = root.derive(3);  // gumbels + weight draws, G then D step order
    Rng noise_rng = root.derive(4);      // z batches
    const DrawMode mode = cfg.draws == "sample" ? DrawMode::PerSample : DrawMode::PerBatch;

    TrainResult out;
    out.generator = make_generator(d);
    out.discriminator = make_discriminator(d, init_rng);
    OptimizerBank opt;

    std::vector<int> perm(data.n);
    for (int i = 0; i < data.n; ++i) perm[i] = i;

    Tape tape;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double tau = anneal_temperature(epoch, cfg);
        // Fisher-Yates on the deterministic shuffle stream.
        for (int i = data.n - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.next_u64() % (i + 1));
            std::swap(perm[i], perm[j]);
        }

        EpochStats stats;
        stats.tau = tau;
        for (int batch = 0; batch < batches_per_epoch; ++batch) {
            try {
                const Matrix real = gather_rows(data.values, perm, batch * k, k);
                Matrix z(k, d);
                for (int i = 0; i < z.size(); ++i) z.data()[i] = noise_rng.normal();

                // --- generator step ---
                tape.reset();
                GeneratorNodes gen = stage_generator(tape, out.generator, true);
                DiscriminatorNodes disc = stage_discriminator(tape, out.discriminator, false);
                FakeBatch fake = generate_batch(tape, z, gen, d, tau, structure_rng, mode);
                Tensor probs = discriminator_forward(tape, disc, fake.x);
                Tensor adv = generator_adv_loss(tape, probs);
                Tensor penalty = fake.penalty;
                Tensor loss_g = tape.add(adv, tape.scale(penalty, cfg.lambda_acyc));
                Gradients grads = tape.backward(loss_g);
                gradient_step(out.generator.logits_directed, grads.wrt(gen.logits_directed),
                              cfg.eta_g, opt.gen_directed, cfg.plain_sgd);
                gradient_step(out.generator.logits_bidirected, grads.wrt(gen.logits_bidirected),
                              cfg.eta_g, opt.gen_bidirected, cfg.plain_sgd);

                const double loss_g_value = tape.scalar_value(loss_g);
                const double adv_value = tape.scalar_value(adv);
                const double penalty_value = tape.scalar_value(penalty);
                stats.loss_g += loss_g_value;
                stats.penalty += penalty_value;
                stats.jitter_events += fake.jitter_events;
                if (hook) {
                    hook({epoch, batch, 'G', loss_g_value, adv_value, penalty_value});
                }

                // --- discriminator step(s): fresh structure/weight draws;
                // the first update reuses the generator-step noise batch ---
                for (int d_step = 0; d_step < cfg.d_steps; ++d_step) {
                    Matrix zd = z;
                    if (d_step > 0) {
                        for (int i = 0; i < zd.size(); ++i) zd.data()[i] = noise_rng.normal();
                    }
                    tape.reset();
                    GeneratorNodes gen2 = stage_generator(tape, out.generator, false);
                    DiscriminatorNodes disc2 = stage_discriminator(tape, out.discriminator, true);
                    FakeBatch fake2 = generate_batch(tape, zd, gen2, d, tau, structure_rng, mode);
                    Tensor probs_fake = discriminator_forward(tape, disc2, fake2.x);
                    Tensor probs_real = discriminator_forward(tape, disc2, tape.constant(real));
                    Tensor loss_d = discriminator_loss(tape, probs_real, probs_fake);
                    Gradients dgrads = tape.backward(loss_d);
                    gradient_step(out.discriminator.w1, dgrads.wrt(disc2.w1), cfg.eta_d, opt.w1,
                                  cfg.plain_sgd);
                    gradient_step(out.discriminator.b1, dgrads.wrt(disc2.b1), cfg.eta_d, opt.b1,
                                  cfg.plain_sgd);
                    gradient_step(out.discriminator.w2, dgrads.wrt(disc2.w2), cfg.eta_d, opt.w2,
                                  cfg.plain_sgd);
                    gradient_step(out.discriminator.b2, dgrads.wrt(disc2.b2), cfg.eta_d, opt.b2,
                                  cfg.plain_sgd);
                    gradient_step(out.discriminator.w3, dgrads.wrt(disc2.w3), cfg.eta_d, opt.w3,
                                  cfg.plain_sgd);
                    gradient_step(out.discriminator.b3, dgrads.wrt(disc2.b3), cfg.eta_d, opt.b3,
                                  cfg.plain_sgd);

                    const double loss_d_value = tape.scalar_value(loss_d);
                    stats.loss_d += loss_d_value / cfg.d_steps;
                    stats.jitter_events += fake2.jitter_events;
                    if (hook) {
                        hook({epoch, batch, 'D', loss_d_value, 0.0, 0.0});
                    }
                }
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + " batch " +
                                   std::to_string(batch) + ": " + e.what());
            }
        }

        stats.loss_g /= batches_per_epoch;
        stats.loss_d /= batches_per_epoch;
        stats.penalty /= batches_per_epoch;
        stats.penalty_hard =
            acyclicity_penalty(threshold_sigmoid(out.generator.logits_directed, cfg.delta));
        out.history.epochs.push_back(stats);
    }
    return out;
}

ExtractionResult extract_structure(const GeneratorParams& params, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("extract: delta must lie in (0,1)");
    const int d = params.d;
    ExtractionResult out;
    out.graph = Admg::empty(d);

    Matrix prob_directed(d, d, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            prob_directed(i, j) = stable_sigmoid(params.logits_directed(i, j));
            if (prob_directed(i, j) > delta) out.graph.set_dir(i, j);
        }
    }
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            if (stable_sigmoid(params.logits_bidirected(i, j)) > delta) out.graph.set_bi(i, j);
        }
    }

    // Cycle repair: drop the lowest-probability edge that sits on some
    // cycle, deterministic lexicographic tie-break, until the directed part
    // is a DAG.
    while (!is_acyclic(out.graph)) {
        // reach[u][v]: v reachable from u along current directed edges.
        std::vector<std::vector<char>> reach(d, std::vector<char>(d, 0));
        for (int u = 0; u < d; ++u) {
            std::vector<int> stack{u};
            while (!stack.empty()) {
                const int v = stack.back();
                stack.pop_back();
                for (int w = 0; w < d; ++w) {
                    if (out.graph.has_dir(v, w) && !reach[u][w]) {
                        reach[u][w] = 1;
                        stack.push_back(w);
                    }
                }
            }
        }
        int best_i = -1;
        int best_j = -1;
        double best_p = 2.0;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                if (!out.graph.has_dir(i, j) || !reach[j][i]) continue;  // edge not on a cycle
                if (prob_directed(i, j) < best_p) {
                    best_p = prob_directed(i, j);
                    best_i = i;
                    best_j = j;
                }
            }
        }
        out.graph.set_dir(best_i, best_j, false);
        ++out.repaired_edges;
    }
    return out;
}

}  // namespace fgancd
