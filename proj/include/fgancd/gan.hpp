#pragma once

#include "fgancd/matrix.hpp"
#include "fgancd/rng.hpp"
#include "fgancd/tape.hpp"

namespace fgancd {

// Generator parameters: edge-existence logits. The directed diagonal never
// produces an edge; only the upper triangle of the bidirected logits is
// used, mirrored into a symmetric soft mask.
struct GeneratorParams {
    int d = 0;
    Matrix logits_directed;
    Matrix logits_bidirected;
};

GeneratorParams make_generator(int d);

// Three-layer MLP discriminator d -> hidden -> hidden -> 1 with
// LeakyReLU(0.2) activations and a sigmoid output.
struct DiscriminatorParams {
    static constexpr int kHidden = 64;
    static constexpr double kLeakySlope = 0.2;
    static constexpr double kProbClamp = 1e-7;

    Matrix w1, b1, w2, b2, w3, b3;
};

// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
DiscriminatorParams make_discriminator(int d, Rng& rng);

// Tape handles for the parameter leaves of one forward/backward pass.
struct GeneratorNodes {
    Tensor logits_directed;
    Tensor logits_bidirected;
};
GeneratorNodes stage_generator(Tape& tape, const GeneratorParams& params, bool requires_grad);

struct DiscriminatorNodes {
    Tensor w1, b1, w2, b2, w3, b3;
};
DiscriminatorNodes stage_discriminator(Tape& tape, const DiscriminatorParams& params,
                                       bool requires_grad);

// Per-entry binary-concrete draws with fresh Gumbel pairs: off-diagonal for
// the directed mask, upper triangle mirrored for the bidirected mask.
struct StructureSample {
    Tensor soft_directed;
    Tensor soft_bidirected;
};
StructureSample sample_structures(Tape& tape, const GeneratorNodes& gen, int d, double tau,
                                  Rng& rng);

// Weight/structure draw granularity: one shared draw per batch, or an
// independent draw per sample. The sample marginal is identical; per-sample
// draws cut the per-step gradient variance by roughly the batch size.
enum class DrawMode { PerBatch, PerSample };

// One generated batch: structure draw(s), weight-prior draw(s), masking and
// the SEM map x = z L^T (I - B)^{-1}. Differentiable w.r.t. the logits
// through the soft masks. `penalty` is the acyclicity score of the sampled
// soft structure (sample mean in PerSample mode), ready for the generator
// loss.
struct FakeBatch {
    Tensor x;               // k x d
    Tensor penalty;         // scalar h(soft directed sample)
    Tensor soft_directed;   // the sampled mask (first sample in PerSample mode)
    Matrix masked_coefs;    // realized B* values (first sample in PerSample mode)
    Matrix masked_noise;    // realized Sigma* values
    int jitter_events = 0;  // rejected indefinite noise draws
};
FakeBatch generate_batch(Tape& tape, const Matrix& z, const GeneratorNodes& gen, int d,
                         double tau, Rng& rng, DrawMode mode = DrawMode::PerBatch);

// Per-row probability that the input is real, clamped to
// [kProbClamp, 1 - kProbClamp] before any log.
Tensor discriminator_forward(Tape& tape, const DiscriminatorNodes& disc, Tensor x);

// L_D = -mean log D(real) - mean log(1 - D(fake)).
Tensor discriminator_loss(Tape& tape, Tensor probs_real, Tensor probs_fake);

// Non-saturating generator loss L_adv = -mean log D(fake).
Tensor generator_adv_loss(Tape& tape, Tensor probs_fake);

}  // namespace fgancd
