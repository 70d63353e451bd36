#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fgancd/errors.hpp"
#include "fgancd/gan.hpp"
#include "fgancd/rng.hpp"
#include "fgancd/simulator.hpp"
#include "test_util.hpp"

#include <cmath>
#include <vector>

using namespace fgancd;
using namespace fgancd::testutil;

namespace {

Matrix normal_matrix(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

GeneratorParams uniform_logit_params(int d, double value) {
    GeneratorParams p = make_generator(d);
    for (int i = 0; i < d * d; ++i) {
        p.logits_directed.data()[i] = value;
        p.logits_bidirected.data()[i] = value;
    }
    return p;
}

// Energy distance statistic between two samples (rows are points).
double energy_statistic(const Matrix& xs, const Matrix& ys) {
    const int d = xs.cols();
    auto dist = [d](const double* a, const double* b) {
        double s = 0.0;
        for (int c = 0; c < d; ++c) {
            const double delta = a[c] - b[c];
            s += delta * delta;
        }
        return std::sqrt(s);
    };
    const int n = xs.rows();
    const int m = ys.rows();
    double xy = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) xy += dist(xs.data() + i * d, ys.data() + j * d);
    }
    double xx = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) xx += dist(xs.data() + i * d, xs.data() + j * d);
    }
    double yy = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) yy += dist(ys.data() + i * d, ys.data() + j * d);
    }
    return 2.0 * xy / (static_cast<double>(n) * m) - 2.0 * xx / (static_cast<double>(n) * n) -
           2.0 * yy / (static_cast<double>(m) * m);
}

}  // namespace

TEST_CASE("sample_structures saturates with extreme logits") {
    Rng rng(3);
    Tape tape;
    const GeneratorParams hi = uniform_logit_params(4, 20.0);
    GeneratorNodes gn = stage_generator(tape, hi, false);
    StructureSample s = sample_structures(tape, gn, 4, 0.1, rng);
    const Matrix& dir = tape.value(s.soft_directed);
    const Matrix& bi = tape.value(s.soft_bidirected);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (i == j) {
                CHECK(dir(i, j) == 0.0);
                CHECK(bi(i, j) == 0.0);
            } else {
                CHECK(dir(i, j) > 0.99);
                CHECK(bi(i, j) > 0.99);
            }
        }
    }

    Tape tape2;
    const GeneratorParams lo = uniform_logit_params(4, -20.0);
    GeneratorNodes gn2 = stage_generator(tape2, lo, false);
    StructureSample s2 = sample_structures(tape2, gn2, 4, 0.1, rng);
    CHECK(max_abs(tape2.value(s2.soft_directed)) < 0.01);
    CHECK(max_abs(tape2.value(s2.soft_bidirected)) < 0.01);
}

TEST_CASE("bidirected soft mask is exactly symmetric") {
    Rng rng(4);
    for (int rep = 0; rep < 10; ++rep) {
        Tape tape;
        GeneratorParams p = make_generator(5);
        for (int i = 0; i < 25; ++i) p.logits_bidirected.data()[i] = rng.uniform(-3, 3);
        GeneratorNodes gn = stage_generator(tape, p, false);
        StructureSample s = sample_structures(tape, gn, 5, 0.7, rng);
        const Matrix& bi = tape.value(s.soft_bidirected);
        CHECK(bi == fgancd::transpose(bi));
    }
}

TEST_CASE("raising one logit never lowers its sampled mask entry (frozen rng)") {
    for (double base : {-1.5, 0.0, 1.5}) {
        double prev = -1.0;
        for (double bump = 0.0; bump <= 3.0; bump += 0.5) {
            Rng rng(505);  // same gumbels every round
            Tape tape;
            GeneratorParams p = make_generator(3);
            p.logits_directed(0, 1) = base + bump;
            GeneratorNodes gn = stage_generator(tape, p, false);
            StructureSample s = sample_structures(tape, gn, 3, 0.5, rng);
            const double entry = tape.value(s.soft_directed)(0, 1);
            CHECK(entry >= prev);
            prev = entry;
        }
    }
}

TEST_CASE("no-edge logits reduce the generator to independent noise") {
    Rng rng(6);
    Tape tape;
    const int k = 10000;
    const int d = 4;
    const Matrix z = normal_matrix(k, d, rng);
    GeneratorNodes gn = stage_generator(tape, uniform_logit_params(d, -20.0), false);
    FakeBatch fb = generate_batch(tape, z, gn, d, 0.1, rng);
    const Matrix& x = tape.value(fb.x);
    // Column variances track the (unmasked) noise diagonal within 10%.
    for (int c = 0; c < d; ++c) {
        double var = 0.0;
        for (int r = 0; r < k; ++r) var += x(r, c) * x(r, c);
        var /= k;
        const double target = fb.masked_noise(c, c);
        CHECK(std::abs(var - target) / target < 0.10);
    }
    // Cross-covariances collapse with the mask.
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            double cov = 0.0;
            for (int r = 0; r < k; ++r) cov += x(r, a) * x(r, b);
            CHECK(std::abs(cov / k) < 0.05);
        }
    }
}

TEST_CASE("d = 1 degenerates to scaled noise") {
    Rng rng(7);
    Tape tape;
    const Matrix z = normal_matrix(64, 1, rng);
    GeneratorNodes gn = stage_generator(tape, make_generator(1), false);
    FakeBatch fb = generate_batch(tape, z, gn, 1, 0.5, rng);
    const double root = std::sqrt(fb.masked_noise(0, 0));
    const Matrix& x = tape.value(fb.x);
    for (int r = 0; r < 64; ++r) {
        CHECK(x(r, 0) == doctest::Approx(z(r, 0) * root).epsilon(1e-12));
    }
}

TEST_CASE("generator path gradient matches finite differences with frozen rng") {
    Rng seed_rng(8);
    const int d = 3;
    const int k = 16;
    const Matrix z = normal_matrix(k, d, seed_rng);
    GeneratorParams base = make_generator(d);
    for (int i = 0; i < d * d; ++i) {
        base.logits_directed.data()[i] = seed_rng.uniform(-0.5, 0.5);
        base.logits_bidirected.data()[i] = seed_rng.uniform(-0.5, 0.5);
    }

    auto build = [&](const GeneratorParams& p, Tape& tape, GeneratorNodes& gn) {
        Rng rng(909);  // frozen structure/weight draws
        gn = stage_generator(tape, p, true);
        FakeBatch fb = generate_batch(tape, z, gn, d, 0.8, rng);
        REQUIRE(fb.jitter_events == 0);
        return tape.mean_reduce(tape.hadamard(fb.x, fb.x));
    };

    Tape tape;
    GeneratorNodes gn;
    Tensor loss = build(base, tape, gn);
    const Gradients grads = tape.backward(loss);

    for (const bool directed : {true, false}) {
        const Matrix& at = directed ? base.logits_directed : base.logits_bidirected;
        const Matrix analytic = grads.wrt(directed ? gn.logits_directed : gn.logits_bidirected);
        const Matrix numeric = finite_difference(
            [&](const Matrix& probe) {
                GeneratorParams p = base;
                (directed ? p.logits_directed : p.logits_bidirected) = probe;
                Tape t;
                GeneratorNodes g;
                return t.scalar_value(build(p, t, g));
            },
            at);
        CHECK(gradient_rel_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("discriminator with zero weights outputs one half everywhere") {
    Rng rng(9);
    DiscriminatorParams p;
    const int h = DiscriminatorParams::kHidden;
    p.w1 = Matrix(3, h, 0.0);
    p.b1 = Matrix(1, h, 0.0);
    p.w2 = Matrix(h, h, 0.0);
    p.b2 = Matrix(1, h, 0.0);
    p.w3 = Matrix(h, 1, 0.0);
    p.b3 = Matrix(1, 1, 0.0);
    Tape tape;
    DiscriminatorNodes dn = stage_discriminator(tape, p, false);
    Tensor probs = discriminator_forward(tape, dn, tape.constant(normal_matrix(5, 3, rng)));
    const Matrix& v = tape.value(probs);
    for (int r = 0; r < 5; ++r) CHECK(v(r, 0) == 0.5);
}

TEST_CASE("discriminator outputs live strictly inside (0,1) and follow row permutations") {
    Rng rng(10);
    DiscriminatorParams p = make_discriminator(4, rng);
    const Matrix x = scale(normal_matrix(8, 4, rng), 30.0);  // try to saturate
    Tape tape;
    DiscriminatorNodes dn = stage_discriminator(tape, p, false);
    const Matrix probs = tape.value(discriminator_forward(tape, dn, tape.constant(x)));
    for (int r = 0; r < 8; ++r) {
        CHECK(probs(r, 0) > 0.0);
        CHECK(probs(r, 0) < 1.0);
    }

    Matrix reversed(8, 4);
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 4; ++c) reversed(r, c) = x(7 - r, c);
    }
    Tape tape2;
    DiscriminatorNodes dn2 = stage_discriminator(tape2, p, false);
    const Matrix probs2 = tape2.value(discriminator_forward(tape2, dn2, tape2.constant(reversed)));
    for (int r = 0; r < 8; ++r) {
        CHECK(probs2(r, 0) == probs(7 - r, 0));
    }
}

TEST_CASE("loss fixtures") {
    Tape tape;
    auto probs = [&](double v, int k = 4) { return tape.constant(Matrix(k, 1, v)); };

    CHECK(tape.scalar_value(discriminator_loss(tape, probs(0.5), probs(0.5))) ==
          doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    // A perfect discriminator is bounded below only by the clamp.
    const double eps = DiscriminatorParams::kProbClamp;
    CHECK(tape.scalar_value(discriminator_loss(tape, probs(1.0 - eps), probs(eps))) <
          1e-5);
    CHECK(tape.scalar_value(discriminator_loss(tape, probs(0.8, 1), probs(0.3, 1))) ==
          doctest::Approx(-std::log(0.8) - std::log(0.7)).epsilon(1e-12));

    CHECK(tape.scalar_value(generator_adv_loss(tape, probs(0.5))) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(tape.scalar_value(generator_adv_loss(tape, probs(1.0 - eps))) <
          1e-6);
    CHECK(tape.scalar_value(generator_adv_loss(tape, probs(0.25, 1))) ==
          doctest::Approx(-std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("adversarial losses match finite differences through the full stack") {
    Rng seed_rng(11);
    const int d = 3;
    const int k = 8;
    const Matrix z = normal_matrix(k, d, seed_rng);
    const Matrix real = normal_matrix(k, d, seed_rng);
    GeneratorParams gen = make_generator(d);
    for (int i = 0; i < d * d; ++i) gen.logits_directed.data()[i] = seed_rng.uniform(-0.4, 0.4);
    Rng init_rng(12);
    DiscriminatorParams disc = make_discriminator(d, init_rng);

    // Generator loss wrt both logit matrices.
    auto gen_loss = [&](const GeneratorParams& p, Tape& tape, GeneratorNodes& gn) {
        Rng rng(7171);
        gn = stage_generator(tape, p, true);
        DiscriminatorNodes dn = stage_discriminator(tape, disc, false);
        FakeBatch fb = generate_batch(tape, z, gn, d, 0.9, rng);
        REQUIRE(fb.jitter_events == 0);
        Tensor adv = generator_adv_loss(tape, discriminator_forward(tape, dn, fb.x));
        Tensor pen = acyclicity_penalty(tape, fb.soft_directed);
        return tape.add(adv, tape.scale(pen, 10.0));
    };
    {
        Tape tape;
        GeneratorNodes gn;
        Tensor loss = gen_loss(gen, tape, gn);
        const Gradients grads = tape.backward(loss);
        for (const bool directed : {true, false}) {
            const Matrix numeric = finite_difference(
                [&](const Matrix& probe) {
                    GeneratorParams p = gen;
                    (directed ? p.logits_directed : p.logits_bidirected) = probe;
                    Tape t;
                    GeneratorNodes g;
                    return t.scalar_value(gen_loss(p, t, g));
                },
                directed ? gen.logits_directed : gen.logits_bidirected);
            const Matrix analytic =
                grads.wrt(directed ? gn.logits_directed : gn.logits_bidirected);
            CHECK(gradient_rel_error(analytic, numeric) < 1e-4);
        }
    }

    // Discriminator loss wrt every discriminator parameter.
    auto disc_loss = [&](const DiscriminatorParams& p, Tape& tape, DiscriminatorNodes& dn) {
        Rng rng(7272);
        GeneratorNodes gn = stage_generator(tape, gen, false);
        dn = stage_discriminator(tape, p, true);
        FakeBatch fb = generate_batch(tape, z, gn, d, 0.9, rng);
        Tensor fake_probs = discriminator_forward(tape, dn, fb.x);
        Tensor real_probs = discriminator_forward(tape, dn, tape.constant(real));
        return discriminator_loss(tape, real_probs, fake_probs);
    };
    Tape tape;
    DiscriminatorNodes dn;
    Tensor loss = disc_loss(disc, tape, dn);
    const Gradients grads = tape.backward(loss);
    struct Slot {
        Matrix DiscriminatorParams::*field;
        Tensor DiscriminatorNodes::*node;
    };
    const std::vector<Slot> slots = {
        {&DiscriminatorParams::w1, &DiscriminatorNodes::w1},
        {&DiscriminatorParams::b1, &DiscriminatorNodes::b1},
        {&DiscriminatorParams::w2, &DiscriminatorNodes::w2},
        {&DiscriminatorParams::b2, &DiscriminatorNodes::b2},
        {&DiscriminatorParams::w3, &DiscriminatorNodes::w3},
        {&DiscriminatorParams::b3, &DiscriminatorNodes::b3},
    };
    for (const Slot& slot : slots) {
        const Matrix numeric = finite_difference(
            [&](const Matrix& probe) {
                DiscriminatorParams p = disc;
                p.*slot.field = probe;
                Tape t;
                DiscriminatorNodes n;
                return t.scalar_value(disc_loss(p, t, n));
            },
            disc.*slot.field);
        CHECK(gradient_rel_error(grads.wrt(dn.*slot.node), numeric) < 1e-4);
    }
}

TEST_CASE("masked noise is symmetric with the unmasked variance diagonal") {
    Rng rng(13);
    for (int rep = 0; rep < 25; ++rep) {
        Tape tape;
        GeneratorParams p = make_generator(4);
        for (int i = 0; i < 16; ++i) p.logits_bidirected.data()[i] = rng.uniform(-2, 2);
        GeneratorNodes gn = stage_generator(tape, p, false);
        FakeBatch fb = generate_batch(tape, normal_matrix(4, 4, rng), gn, 4, 0.8, rng);
        CHECK(fb.masked_noise == fgancd::transpose(fb.masked_noise));
        for (int i = 0; i < 4; ++i) {
            CHECK(fb.masked_noise(i, i) >= 0.7);  // jitter only ever adds
        }
    }
}

TEST_CASE("dense supports keep full-strength noise draws via rejection") {
    // With every bidirected mask saturated, many raw draws are indefinite;
    // the sampler must redraw (jitter_events counts them) and the accepted
    // noise must keep the prior's magnitudes rather than a weakened copy.
    Rng rng(21);
    GeneratorParams p = make_generator(4);
    for (int i = 0; i < 16; ++i) {
        p.logits_directed.data()[i] = -50.0;
        p.logits_bidirected.data()[i] = 50.0;
    }
    long total_rejections = 0;
    for (int rep = 0; rep < 40; ++rep) {
        Tape tape;
        GeneratorNodes gn = stage_generator(tape, p, false);
        Matrix z(8, 4);
        for (int i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
        FakeBatch fb = generate_batch(tape, z, gn, 4, 0.01, rng);
        total_rejections += fb.jitter_events;
        CHECK_NOTHROW(cholesky_lower(fb.masked_noise));
        for (int i = 0; i < 4; ++i) {
            CHECK(fb.masked_noise(i, i) >= 0.7);
            CHECK(fb.masked_noise(i, i) <= 1.2);
            for (int j = i + 1; j < 4; ++j) {
                CHECK(std::abs(fb.masked_noise(i, j)) >= 0.4 * 0.999);
                CHECK(std::abs(fb.masked_noise(i, j)) <= 0.7);
            }
        }
    }
    CHECK(total_rejections > 0);
}

TEST_CASE("hard-masked generator output matches the simulator in distribution") {
    // Saturated logits reproduce a fixed structure; the realized masked
    // weights then define a SEM whose simulate() output must be
    // indistinguishable from the generator batch (energy-distance
    // permutation test).
    Rng rng(14);
    const int d = 4;
    const int n = 10000;
    GeneratorParams p = make_generator(d);
    for (int i = 0; i < d * d; ++i) {
        p.logits_directed.data()[i] = -50.0;
        p.logits_bidirected.data()[i] = -50.0;
    }
    // Case A structure.
    p.logits_directed(2, 1) = 50.0;
    p.logits_directed(2, 3) = 50.0;
    p.logits_directed(0, 3) = 50.0;
    p.logits_directed(3, 1) = 50.0;
    p.logits_bidirected(0, 1) = 50.0;

    Tape tape;
    GeneratorNodes gn = stage_generator(tape, p, false);
    Rng z_rng(15);
    FakeBatch fb = generate_batch(tape, normal_matrix(n, d, z_rng), gn, d, 0.01, rng);
    const Matrix& fake = tape.value(fb.x);

    // Hard masks: the realized weights are exactly a SEM instance.
    WeightedSem sem;
    sem.coefs = fb.masked_coefs;
    sem.noise_cov = fb.masked_noise;
    const Matrix simulated = simulate(sem, n, 16).values;

    const double observed = energy_statistic(fake, simulated);

    // Permutation null: pool the samples, relabel, recompute.
    Matrix pool(2 * n, d);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < d; ++c) {
            pool(r, c) = fake(r, c);
            pool(n + r, c) = simulated(r, c);
        }
    }
    Rng perm_rng(17);
    int as_extreme = 0;
    const int permutations = 19;
    std::vector<int> order(2 * n);
    for (int i = 0; i < 2 * n; ++i) order[i] = i;
    for (int b = 0; b < permutations; ++b) {
        for (int i = 2 * n - 1; i > 0; --i) {
            const int j = static_cast<int>(perm_rng.next_u64() % (i + 1));
            std::swap(order[i], order[j]);
        }
        Matrix xs(n, d);
        Matrix ys(n, d);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < d; ++c) {
                xs(r, c) = pool(order[r], c);
                ys(r, c) = pool(order[n + r], c);
            }
        }
        as_extreme += energy_statistic(xs, ys) >= observed;
    }
    const double p_value = (1.0 + as_extreme) / (permutations + 1.0);
    CHECK(p_value > 0.01);
}
