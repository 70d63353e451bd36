#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fgancd/errors.hpp"
#include "fgancd/experiment.hpp"
#include "fgancd/rng.hpp"
#include "fgancd/simulator.hpp"
#include "fgancd/trainer.hpp"

#include <cmath>
#include <cstring>
#include <vector>

using namespace fgancd;

namespace {

Dataset tiny_dataset(int n = 64, std::uint64_t seed = 3) {
    Admg g = Admg::empty(3);
    g.set_dir(0, 1);
    g.set_dir(1, 2);
    g.set_bi(0, 2);
    return simulate(sample_ground_truth(g, seed), n, seed + 1);
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 32;
    cfg.seed = 9;
    return cfg;
}

}  // namespace

TEST_CASE("temperature anneal endpoints and midpoint") {
    TrainConfig cfg;
    cfg.epochs = 4000;
    CHECK(anneal_temperature(0, cfg) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(anneal_temperature(3999, cfg) == doctest::Approx(0.1).epsilon(1e-12));
    cfg.epochs = 11;
    CHECK(anneal_temperature(5, cfg) == doctest::Approx(std::sqrt(0.1)).epsilon(1e-12));
    cfg.epochs = 1;
    CHECK(anneal_temperature(0, cfg) == doctest::Approx(1.0));
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    TrainConfig bad = cfg;
    bad.tau_end = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.delta = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.anneal = "linear";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.eta_g = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("one epoch with a full-size batch runs exactly one G and one D step") {
    const Dataset data = tiny_dataset();
    TrainConfig cfg = tiny_config();
    cfg.epochs = 1;
    cfg.batch_size = data.n;
    std::vector<char> kinds;
    const TrainResult result = train(data, cfg, [&](const StepEvent& e) {
        kinds.push_back(e.kind);
    });
    CHECK(result.history.epochs.size() == 1);
    REQUIRE(kinds.size() == 2);
    CHECK(kinds[0] == 'G');
    CHECK(kinds[1] == 'D');
}

TEST_CASE("generator step always precedes the discriminator step in every batch") {
    const Dataset data = tiny_dataset();
    const TrainConfig cfg = tiny_config();
    std::vector<char> kinds;
    train(data, cfg, [&](const StepEvent& e) { kinds.push_back(e.kind); });
    REQUIRE(kinds.size() % 2 == 0);
    for (std::size_t i = 0; i < kinds.size(); i += 2) {
        CHECK(kinds[i] == 'G');
        CHECK(kinds[i + 1] == 'D');
    }
}

TEST_CASE("with lambda = 0 the penalty contributes nothing to the generator loss") {
    const Dataset data = tiny_dataset();
    TrainConfig cfg = tiny_config();
    cfg.lambda_acyc = 0.0;
    train(data, cfg, [&](const StepEvent& e) {
        if (e.kind == 'G') {
            CHECK(e.loss == doctest::Approx(e.adversarial).epsilon(1e-15));
        }
    });
}

TEST_CASE("training is bit-deterministic given data and config") {
    const Dataset data = tiny_dataset();
    const TrainConfig cfg = tiny_config();
    const TrainResult a = train(data, cfg);
    const TrainResult b = train(data, cfg);
    REQUIRE(a.history.epochs.size() == b.history.epochs.size());
    for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
        CHECK(std::memcmp(&a.history.epochs[e], &b.history.epochs[e], sizeof(EpochStats)) == 0);
    }
    CHECK(a.generator.logits_directed == b.generator.logits_directed);
    CHECK(a.generator.logits_bidirected == b.generator.logits_bidirected);
    CHECK(a.discriminator.w2 == b.discriminator.w2);
    CHECK(extract_structure(a.generator, cfg.delta).graph ==
          extract_structure(b.generator, cfg.delta).graph);

    TrainConfig other = cfg;
    other.seed = cfg.seed + 1;
    const TrainResult c = train(data, other);
    CHECK(a.generator.logits_directed != c.generator.logits_directed);
}

TEST_CASE("train validates its inputs") {
    const Dataset data = tiny_dataset();
    TrainConfig cfg = tiny_config();
    cfg.batch_size = data.n + 1;
    CHECK_THROWS_AS(train(data, cfg), ConfigError);
    Dataset narrow;
    narrow.n = 8;
    narrow.d = 1;
    narrow.values = Matrix(8, 1, 0.5);
    CHECK_THROWS_AS(train(narrow, tiny_config()), ConfigError);
}

TEST_CASE("gradient_step: zero gradient leaves parameters unchanged") {
    Matrix p(2, 2, 1.5);
    const Matrix zero(2, 2, 0.0);
    AdamState state;
    gradient_step(p, zero, 0.1, state);
    CHECK(p == Matrix(2, 2, 1.5));
    gradient_step(p, zero, 0.1, state, /*plain_sgd=*/true);
    CHECK(p == Matrix(2, 2, 1.5));
}

TEST_CASE("gradient_step: plain SGD subtracts lr * grad exactly") {
    Matrix p(1, 2, 1.0);
    Matrix g(1, 2, 0.0);
    g(0, 0) = 0.5;
    g(0, 1) = -2.0;
    AdamState state;
    gradient_step(p, g, 0.1, state, /*plain_sgd=*/true);
    CHECK(p(0, 0) == doctest::Approx(1.0 - 0.05).epsilon(1e-15));
    CHECK(p(0, 1) == doctest::Approx(1.0 + 0.2).epsilon(1e-15));
}

TEST_CASE("gradient_step: adaptive two-step trace matches the scalar recurrence") {
    // Independent scalar reference of the moment recurrence.
    const double g = 0.2;
    const double lr = 0.01;
    double m = 0.0;
    double v = 0.0;
    double ref = 1.0;
    std::vector<double> expected;
    for (int step = 0; step < 2; ++step) {
        m = 0.5 * m + 0.5 * g;
        v = 0.999 * v + 0.001 * g * g;
        ref -= lr * m / (std::sqrt(v) + 1e-8);
        expected.push_back(ref);
    }
    // The two step sizes must differ (moments are still accumulating).
    CHECK(std::abs((1.0 - expected[0]) - (expected[0] - expected[1])) > 1e-4);

    Matrix p(1, 1, 1.0);
    const Matrix grad(1, 1, g);
    AdamState state;
    gradient_step(p, grad, lr, state);
    CHECK(p(0, 0) == doctest::Approx(expected[0]).epsilon(1e-15));
    gradient_step(p, grad, lr, state);
    CHECK(p(0, 0) == doctest::Approx(expected[1]).epsilon(1e-15));
}

TEST_CASE("gradient_step rejects non-finite gradients") {
    Matrix p(1, 1, 0.0);
    Matrix g(1, 1, std::nan(""));
    AdamState state;
    CHECK_THROWS_AS(gradient_step(p, g, 0.1, state), NonFiniteGradient);
}

TEST_CASE("extraction thresholds the logit sigmoids") {
    GeneratorParams p = make_generator(3);
    for (int i = 0; i < 9; ++i) {
        p.logits_directed.data()[i] = -5.0;
        p.logits_bidirected.data()[i] = -5.0;
    }
    CHECK(extract_structure(p, 0.5).graph == Admg::empty(3));

    p.logits_directed(0, 1) = 5.0;
    const ExtractionResult single = extract_structure(p, 0.5);
    CHECK(single.graph.has_dir(0, 1));
    CHECK(single.graph.directed_edge_count() == 1);
    CHECK(single.repaired_edges == 0);

    p.logits_bidirected(1, 2) = 5.0;
    CHECK(extract_structure(p, 0.5).graph.has_bi(1, 2));
    // Lower-triangle bidirected logits are ignored by contract.
    GeneratorParams q = make_generator(3);
    for (int i = 0; i < 9; ++i) q.logits_bidirected.data()[i] = -5.0;
    q.logits_bidirected(2, 0) = 5.0;
    CHECK(extract_structure(q, 0.5).graph.bidirected_edge_count() == 0);
}

TEST_CASE("cycle repair deletes the weakest edge with a lexicographic tie-break") {
    GeneratorParams p = make_generator(2);
    p.logits_directed(0, 1) = 5.0;
    p.logits_directed(1, 0) = 5.0;
    const ExtractionResult r = extract_structure(p, 0.5);
    CHECK(r.repaired_edges == 1);
    CHECK(is_acyclic(r.graph));
    CHECK_FALSE(r.graph.has_dir(0, 1));  // (0,1) lexicographically first among ties
    CHECK(r.graph.has_dir(1, 0));

    // Weakest-on-cycle selection: a 3-cycle where (2,0) is weakest.
    GeneratorParams q = make_generator(3);
    for (int i = 0; i < 9; ++i) q.logits_directed.data()[i] = -5.0;
    q.logits_directed(0, 1) = 4.0;
    q.logits_directed(1, 2) = 3.0;
    q.logits_directed(2, 0) = 2.0;
    const ExtractionResult s = extract_structure(q, 0.5);
    CHECK(s.repaired_edges == 1);
    CHECK(s.graph.has_dir(0, 1));
    CHECK(s.graph.has_dir(1, 2));
    CHECK_FALSE(s.graph.has_dir(2, 0));
}

TEST_CASE("extraction always yields an acyclic directed part") {
    Rng rng(44);
    for (int rep = 0; rep < 50; ++rep) {
        GeneratorParams p = make_generator(5);
        for (int i = 0; i < 25; ++i) {
            p.logits_directed.data()[i] = rng.uniform(-6, 6);
            p.logits_bidirected.data()[i] = rng.uniform(-6, 6);
        }
        const ExtractionResult r = extract_structure(p, 0.5);
        CHECK(is_acyclic(r.graph));
        CHECK_NOTHROW(validate(r.graph));
    }
    GeneratorParams p = make_generator(2);
    CHECK_THROWS_AS(extract_structure(p, 1.5), ConfigError);
}

TEST_CASE("history records one row per epoch with finite values") {
    const Dataset data = tiny_dataset();
    TrainConfig cfg = tiny_config();
    cfg.epochs = 4;
    const TrainResult result = train(data, cfg);
    REQUIRE(result.history.epochs.size() == 4);
    for (std::size_t e = 0; e < 4; ++e) {
        const EpochStats& row = result.history.epochs[e];
        CHECK(std::isfinite(row.loss_g));
        CHECK(std::isfinite(row.loss_d));
        CHECK(row.penalty >= -1e-9);
        CHECK(row.penalty_hard >= -1e-9);
        CHECK(row.tau == doctest::Approx(anneal_temperature(static_cast<int>(e), cfg)));
        CHECK(row.jitter_events >= 0);
    }
}

TEST_CASE("hard acyclicity trend settles over the last epochs of a short run") {
    // Windowed averages of h(thresholded sigmoid(logits)) over the final 100
    // epochs must be non-increasing once the penalty has taken hold.
    const Admg truth = case_study_graph('A');
    const Dataset data = simulate(sample_ground_truth(truth, 51), 500, 52);
    TrainConfig cfg;
    cfg.epochs = 300;
    cfg.batch_size = 100;
    cfg.seed = 53;
    const TrainResult result = train(data, cfg);
    const auto& rows = result.history.epochs;
    REQUIRE(rows.size() == 300);
    std::vector<double> windows;
    for (int w = 0; w < 4; ++w) {
        double mean = 0.0;
        for (int e = 0; e < 25; ++e) mean += rows[200 + w * 25 + e].penalty_hard;
        windows.push_back(mean / 25.0);
    }
    for (int w = 1; w < 4; ++w) {
        CHECK(windows[w] <= windows[w - 1] + 1e-9);
    }
}
