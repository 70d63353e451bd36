#include "fgancd/gan.hpp"

#include "fgancd/admg.hpp"
#include "fgancd/errors.hpp"
#include "fgancd/weight_prior.hpp"

#include <cmath>

namespace fgancd {

GeneratorParams make_generator(int d) {
    GeneratorParams p;
    p.d = d;
    p.logits_directed = Matrix(d, d, 0.0);
    p.logits_bidirected = Matrix(d, d, 0.0);
    return p;
}

DiscriminatorParams make_discriminator(int d, Rng& rng) {
    DiscriminatorParams p;
    const int h = DiscriminatorParams::kHidden;
    auto init = [&rng](int rows, int cols) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
        Matrix m(rows, cols);
        for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
        return m;
    };
    p.w1 = init(d, h);
    p.b1 = Matrix(1, h, 0.0);
    p.w2 = init(h, h);
    p.b2 = Matrix(1, h, 0.0);
    p.w3 = init(h, 1);
    p.b3 = Matrix(1, 1, 0.0);
    return p;
}

GeneratorNodes stage_generator(Tape& tape, const GeneratorParams& params, bool requires_grad) {
    GeneratorNodes n;
    n.logits_directed = tape.leaf(params.logits_directed, requires_grad);
    n.logits_bidirected = tape.leaf(params.logits_bidirected, requires_grad);
    return n;
}

DiscriminatorNodes stage_discriminator(Tape& tape, const DiscriminatorParams& params,
                                       bool requires_grad) {
    DiscriminatorNodes n;
    n.w1 = tape.leaf(params.w1, requires_grad);
    n.b1 = tape.leaf(params.b1, requires_grad);
    n.w2 = tape.leaf(params.w2, requires_grad);
    n.b2 = tape.leaf(params.b2, requires_grad);
    n.w3 = tape.leaf(params.w3, requires_grad);
    n.b3 = tape.leaf(params.b3, requires_grad);
    return n;
}

namespace {

// Fresh Gumbel pair per entry per call; draws run row-major so a fixed rng
// state reproduces the sample exactly.
void draw_gumbel_pairs(Matrix& g0, Matrix& g1, Rng& rng) {
    for (int i = 0; i < g0.size(); ++i) {
        g0.data()[i] = rng.gumbel();
        g1.data()[i] = rng.gumbel();
    }
}

Matrix off_diagonal_mask(int d) {
    Matrix m(d, d, 1.0);
    for (int i = 0; i < d; ++i) m(i, i) = 0.0;
    return m;
}

Matrix strict_upper_mask(int d) {
    Matrix m(d, d, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) m(i, j) = 1.0;
    }
    return m;
}

}  // namespace

StructureSample sample_structures(Tape& tape, const GeneratorNodes& gen, int d, double tau,
                                  Rng& rng) {
    if (!(tau > 0.0)) {
        throw NonPositiveTemperature("sample_structures: tau = " + std::to_string(tau));
    }
    Matrix g0(d, d);
    Matrix g1(d, d);

    draw_gumbel_pairs(g0, g1, rng);
    Tensor conc_dir = tape.binary_concrete(gen.logits_directed, tape.constant(std::move(g0)),
                                           tape.constant(std::move(g1)), tau);
    Tensor soft_dir = tape.hadamard(conc_dir, tape.constant(off_diagonal_mask(d)));

    Matrix h0(d, d);
    Matrix h1(d, d);
    draw_gumbel_pairs(h0, h1, rng);
    Tensor conc_bi = tape.binary_concrete(gen.logits_bidirected, tape.constant(std::move(h0)),
                                          tape.constant(std::move(h1)), tau);
    Tensor upper = tape.hadamard(conc_bi, tape.constant(strict_upper_mask(d)));
    Tensor soft_bi = tape.add(upper, tape.transpose(upper));

    return {soft_dir, soft_bi};
}

namespace {

// Draw the directed-coefficient matrix and a noise covariance whose masked
// version is positive definite (rejection keeps the prior undistorted; a
// silently repaired draw would erase the distributional cost of dense
// confounding supports). The accepted draws are constants w.r.t. gradients.
struct WeightDraw {
    Matrix coefs;
    Matrix noise;
    int rejections = 0;
};

WeightDraw draw_weights(int d, const Matrix& soft_bidirected, Rng& rng) {
    WeightDraw out;
    out.coefs = Matrix(d, d, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (i != j) out.coefs(i, j) = WeightPrior::directed_weight(rng);
        }
    }
    for (int attempt = 0;; ++attempt) {
        Matrix noise(d, d, 0.0);
        for (int i = 0; i < d; ++i) noise(i, i) = WeightPrior::noise_variance(rng);
        for (int i = 0; i < d; ++i) {
            for (int j = i + 1; j < d; ++j) {
                const double v = WeightPrior::noise_covariance(rng);
                noise(i, j) = v;
                noise(j, i) = v;
            }
        }
        Matrix masked = noise;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                if (i != j) masked(i, j) *= soft_bidirected(i, j);
            }
        }
        bool ok = true;
        try {
            cholesky_lower(masked);
        } catch (const NotPositiveDefinite&) {
            ok = false;
        }
        if (ok) {
            out.noise = std::move(noise);
            return out;
        }
        ++out.rejections;
        if (attempt >= 200) {
            throw CholeskyFailureAfterJitter(
                "generate_batch: no positive-definite noise draw in 200 attempts");
        }
    }
}

struct SampleTensors {
    Tensor x;
    Tensor soft_directed;
    Tensor masked_coefs;
    Tensor masked_noise;
};

// One structure + weight realization mapped through the SEM for the given
// noise rows.
SampleTensors realize(Tape& tape, const Matrix& z_rows, const GeneratorNodes& gen, int d,
                      double tau, Rng& rng, int& rejections) {
    StructureSample structure = sample_structures(tape, gen, d, tau, rng);
    WeightDraw draw = draw_weights(d, tape.value(structure.soft_bidirected), rng);
    rejections += draw.rejections;

    SampleTensors out;
    out.soft_directed = structure.soft_directed;
    out.masked_coefs = tape.hadamard(structure.soft_directed, tape.constant(std::move(draw.coefs)));
    // Variances stay unmasked: the bidirected mask has a zero diagonal, so
    // adding I before the Hadamard keeps every Sigma*_ii = Sigma'_ii >= 0.7.
    Tensor mask_plus_i = tape.add(structure.soft_bidirected, tape.constant(Matrix::identity(d)));
    out.masked_noise = tape.hadamard(mask_plus_i, tape.constant(std::move(draw.noise)));

    Tensor factor = tape.cholesky(out.masked_noise);
    Tensor mix = tape.mat_inverse(tape.sub(tape.constant(Matrix::identity(d)), out.masked_coefs));
    Tensor errors = tape.matmul(tape.constant(z_rows), tape.transpose(factor));
    out.x = tape.matmul(errors, mix);
    return out;
}

}  // namespace

FakeBatch generate_batch(Tape& tape, const Matrix& z, const GeneratorNodes& gen, int d,
                         double tau, Rng& rng, DrawMode mode) {
    if (z.cols() != d || z.rows() < 1) {
        throw ShapeMismatch("generate_batch: noise batch must be k x d with k >= 1");
    }
    FakeBatch out;
    if (mode == DrawMode::PerBatch) {
        SampleTensors s = realize(tape, z, gen, d, tau, rng, out.jitter_events);
        out.x = s.x;
        out.penalty = acyclicity_penalty(tape, s.soft_directed);
        out.soft_directed = s.soft_directed;
        out.masked_coefs = tape.value(s.masked_coefs);
        out.masked_noise = tape.value(s.masked_noise);
        return out;
    }

    const int k = z.rows();
    std::vector<Tensor> rows;
    std::vector<Tensor> penalties;
    rows.reserve(k);
    penalties.reserve(k);
    for (int r = 0; r < k; ++r) {
        Matrix z_row(1, d);
        for (int c = 0; c < d; ++c) z_row(0, c) = z(r, c);
        SampleTensors s = realize(tape, z_row, gen, d, tau, rng, out.jitter_events);
        rows.push_back(s.x);
        penalties.push_back(acyclicity_penalty(tape, s.soft_directed));
        if (r == 0) {
            out.soft_directed = s.soft_directed;
            out.masked_coefs = tape.value(s.masked_coefs);
            out.masked_noise = tape.value(s.masked_noise);
        }
    }
    out.x = tape.row_stack(rows);
    out.penalty = tape.mean_reduce(tape.row_stack(penalties));
    return out;
}

Tensor discriminator_forward(Tape& tape, const DiscriminatorNodes& disc, Tensor x) {
    const double slope = DiscriminatorParams::kLeakySlope;
    Tensor h1 = tape.leaky_relu(tape.add(tape.matmul(x, disc.w1), disc.b1), slope);
    Tensor h2 = tape.leaky_relu(tape.add(tape.matmul(h1, disc.w2), disc.b2), slope);
    Tensor raw = tape.sigmoid(tape.add(tape.matmul(h2, disc.w3), disc.b3));
    const double eps = DiscriminatorParams::kProbClamp;
    return tape.clamp(raw, eps, 1.0 - eps);
}

Tensor discriminator_loss(Tape& tape, Tensor probs_real, Tensor probs_fake) {
    Tensor real_term = tape.scale(tape.mean_reduce(tape.log(probs_real)), -1.0);
    Tensor ones = tape.constant(Matrix(probs_fake.rows, probs_fake.cols, 1.0));
    Tensor fake_term = tape.scale(tape.mean_reduce(tape.log(tape.sub(ones, probs_fake))), -1.0);
    return tape.add(real_term, fake_term);
}

Tensor generator_adv_loss(Tape& tape, Tensor probs_fake) {
    return tape.scale(tape.mean_reduce(tape.log(probs_fake)), -1.0);
}

}  // namespace fgancd
