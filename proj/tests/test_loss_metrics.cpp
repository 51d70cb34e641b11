#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "gnfbc/errors.hpp"
#include "gnfbc/loss.hpp"
#include "gnfbc/metrics.hpp"
#include "gnfbc/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gnfbc;

TEST_CASE("one hot") {
    const DenseMatrix y = one_hot({2, 0}, 3);
    CHECK(y(0, 2) == 1.0);
    CHECK(y(1, 0) == 1.0);
    CHECK(y(0, 0) == 0.0);
    CHECK_THROWS_AS(one_hot({3}, 3), ValidationError);
}

TEST_CASE("negative feedback loss") {
    const auto k2 = std::make_shared<SparseGraph>(SparseGraph::from_edges(2, {{0, 1}}));
    const auto ones = std::make_shared<std::vector<double>>(2, 1.0);

    SUBCASE("zero penalty scale reduces to the bare fit term") {
        SeededRng rng(1);
        const DenseMatrix x = testutil::random_matrix(rng, 2, 3);
        const Labels y = {0, 2};
        LossConfig cfg;
        cfg.lambda = 0.0;

        Tape t;
        const Value probs = t.softmax_rows(t.leaf(x));
        const Value loss = negative_feedback_loss(t, probs, probs, y, k2, ones, cfg, {0, 1});
        Tape t2;
        const Value probs2 = t2.softmax_rows(t2.leaf(x));
        const Value fit = t2.cross_entropy(probs2, y, {0, 1});
        CHECK(t.value(loss)(0, 0) == t2.value(fit)(0, 0));
    }
    SUBCASE("an isolated training node contributes no penalty") {
        const auto g = std::make_shared<SparseGraph>(SparseGraph::from_edges(3, {{0, 1}}));
        const auto beta = std::make_shared<std::vector<double>>(3, 0.9);
        SeededRng rng(2);
        const DenseMatrix x = testutil::random_matrix(rng, 3, 2);
        LossConfig cfg;
        cfg.lambda = 1.0;
        cfg.nodes = PenaltyNodes::TrainOnly;

        Tape t;
        const Value probs = t.softmax_rows(t.leaf(x));
        const Value loss = negative_feedback_loss(t, probs, probs, {1, 0, 1}, g, beta, cfg, {2});
        Tape t2;
        const Value probs2 = t2.softmax_rows(t2.leaf(x));
        const Value fit = t2.cross_entropy(probs2, {1, 0, 1}, {2});
        CHECK(t.value(loss)(0, 0) == doctest::Approx(t2.value(fit)(0, 0)).epsilon(1e-15));
    }
    SUBCASE("perfect squared-error fit leaves only the neighbor penalty") {
        // Single edge, scalar predictions (1, 0): the fit term vanishes and
        // each endpoint contributes its beta-weighted disagreement of 1.
        DenseMatrix pred(2, 1);
        pred(0, 0) = 1.0;
        auto target = std::make_shared<const DenseMatrix>(pred);
        const auto nodes = std::make_shared<Mask>(Mask{0, 1});
        Tape t;
        const Value p = t.leaf(pred);
        const Value fit = t.mse_loss(p, target, {0, 1});
        const Value total = t.add(fit, t.scale(t.neighbor_penalty(p, k2, ones, nodes), 1.0));
        CHECK(t.value(fit)(0, 0) == 0.0);
        CHECK(t.value(total)(0, 0) == 2.0);
    }
    SUBCASE("mse fit path measures against the one-hot labels") {
        LossConfig cfg;
        cfg.fit = FitTerm::Mse;
        cfg.lambda = 0.0;
        Tape t;
        const Value probs = t.leaf(DenseMatrix(2, 2, 0.5));
        const Value loss = negative_feedback_loss(t, probs, probs, {0, 1}, k2, ones, cfg, {0, 1});
        CHECK(t.value(loss)(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("negative or non-finite penalty scales are rejected") {
        Tape t;
        const Value probs = t.leaf(DenseMatrix(2, 2, 0.5));
        LossConfig cfg;
        cfg.lambda = -0.1;
        CHECK_THROWS_AS(
            negative_feedback_loss(t, probs, probs, {0, 1}, k2, ones, cfg, {0, 1}),
            ValidationError);
    }
    SUBCASE("gradient of the full objective matches finite differences") {
        SeededRng rng(3);
        const auto g = std::make_shared<SparseGraph>(testutil::random_graph(rng, 6, 5));
        auto beta = std::make_shared<std::vector<double>>(6);
        for (auto& b : *beta) b = rng.uniform();
        const Labels y = testutil::random_labels(rng, 6, 3);
        const Mask train = {0, 2, 4};
        const DenseMatrix x0 = testutil::random_matrix(rng, 6, 3);
        LossConfig cfg;

        auto eval = [&](const DenseMatrix& x) {
            Tape t;
            const Value logits = t.param(x);
            const Value probs = t.softmax_rows(logits);
            return t.value(negative_feedback_loss(t, probs, logits, y, g, beta, cfg, train))(0, 0);
        };
        Tape t;
        const Value logits = t.param(x0);
        const Value probs = t.softmax_rows(logits);
        t.backward(negative_feedback_loss(t, probs, logits, y, g, beta, cfg, train));
        CHECK(oracle::max_grad_rel_error(eval, x0, t.grad(logits)) < 1e-6);
    }
}

TEST_CASE("accuracy") {
    DenseMatrix probs(3, 2);
    probs(0, 0) = 0.9;
    probs(0, 1) = 0.1;
    probs(1, 0) = 0.2;
    probs(1, 1) = 0.8;
    probs(2, 0) = 0.5;
    probs(2, 1) = 0.5;
    SUBCASE("counts argmax hits, ties to the lowest class") {
        CHECK(accuracy(probs, {0, 1, 0}, {0, 1, 2}) == 1.0);
        CHECK(accuracy(probs, {1, 0, 1}, {0, 1, 2}) == 0.0);
        CHECK(accuracy(probs, {0, 0, 1}, {0, 1, 2}) == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("empty mask is rejected") {
        CHECK_THROWS_AS(accuracy(probs, {0, 1, 0}, {}), ValidationError);
    }
    SUBCASE("matches a direct count on a random instance") {
        SeededRng rng(4);
        const DenseMatrix p = testutil::random_matrix(rng, 20, 4, 0.0, 1.0);
        const Labels y = testutil::random_labels(rng, 20, 4);
        Mask mask(20);
        for (std::size_t i = 0; i < 20; ++i) mask[i] = static_cast<std::uint32_t>(i);
        double hits = 0.0;
        for (std::size_t i = 0; i < 20; ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < 4; ++j) {
                if (p(i, j) > p(i, best)) best = j;
            }
            if (static_cast<int>(best) == y[i]) hits += 1.0;
        }
        CHECK(accuracy(p, y, mask) == doctest::Approx(hits / 20.0).epsilon(1e-15));
    }
}

TEST_CASE("auc") {
    SUBCASE("separated scores score one, flipped labels score zero") {
        const std::vector<double> s = {0.1, 0.2, 0.8, 0.9};
        CHECK(auc_roc(s, {0, 0, 1, 1}, {0, 1, 2, 3}) == 1.0);
        CHECK(auc_roc(s, {1, 1, 0, 0}, {0, 1, 2, 3}) == 0.0);
    }
    SUBCASE("all ties give one half") {
        CHECK(auc_roc({0.4, 0.4, 0.4}, {1, 0, 1}, {0, 1, 2}) == 0.5);
    }
    SUBCASE("single-class mask is rejected") {
        CHECK_THROWS_AS(auc_roc({0.1, 0.9}, {1, 1}, {0, 1}), ValidationError);
    }
    SUBCASE("matches the pair-counting oracle") {
        SeededRng rng(5);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> s(15);
            for (auto& v : s) v = rng.uniform();
            s[3] = s[7]; // force at least one tie
            Labels y = testutil::random_labels(rng, 15, 2);
            y[0] = 0;
            y[1] = 1;
            Mask mask(15);
            for (std::size_t i = 0; i < 15; ++i) mask[i] = static_cast<std::uint32_t>(i);
            CHECK(auc_roc(s, y, mask) ==
                  doctest::Approx(oracle::pair_count_auc(s, y)).epsilon(1e-12));
        }
    }
}

TEST_CASE("macro f1") {
    SUBCASE("perfect predictions score one") {
        DenseMatrix p(2, 2);
        p(0, 0) = 0.9;
        p(0, 1) = 0.1;
        p(1, 0) = 0.1;
        p(1, 1) = 0.9;
        CHECK(f1_macro(p, {0, 1}, {0, 1}, 2) == 1.0);
    }
    SUBCASE("all predicted positive with half positive truth") {
        DenseMatrix p(4, 2);
        for (std::size_t i = 0; i < 4; ++i) p(i, 1) = 1.0;
        CHECK(f1_macro(p, {1, 1, 0, 0}, {0, 1, 2, 3}, 2) ==
              doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
    SUBCASE("matches the confusion-matrix oracle") {
        SeededRng rng(6);
        for (int trial = 0; trial < 10; ++trial) {
            const DenseMatrix p = testutil::random_matrix(rng, 25, 3, 0.0, 1.0);
            const Labels y = testutil::random_labels(rng, 25, 3);
            Mask mask(25);
            for (std::size_t i = 0; i < 25; ++i) mask[i] = static_cast<std::uint32_t>(i);
            std::vector<int> argmax(25);
            for (std::size_t i = 0; i < 25; ++i) {
                std::size_t best = 0;
                for (std::size_t j = 1; j < 3; ++j) {
                    if (p(i, j) > p(i, best)) best = j;
                }
                argmax[i] = static_cast<int>(best);
            }
            CHECK(f1_macro(p, y, mask, 3) ==
                  doctest::Approx(oracle::f1_macro(argmax, y, 3)).epsilon(1e-12));
        }
    }
}

TEST_CASE("metrics report") {
    DenseMatrix p(4, 2);
    p(0, 0) = 0.8;
    p(0, 1) = 0.2;
    p(1, 0) = 0.3;
    p(1, 1) = 0.7;
    p(2, 0) = 0.6;
    p(2, 1) = 0.4;
    p(3, 0) = 0.1;
    p(3, 1) = 0.9;
    SUBCASE("binary tasks include auc") {
        const MetricsReport r = evaluate_split(p, {0, 1, 1, 1}, {0, 1, 2, 3}, 2, "val", 7);
        CHECK(r.auc.has_value());
        CHECK(r.split == "val");
        CHECK(r.epoch == 7);
        CHECK(r.accuracy == doctest::Approx(0.75));
    }
    SUBCASE("multiclass tasks omit auc") {
        DenseMatrix q(3, 3, 1.0 / 3.0);
        const MetricsReport r = evaluate_split(q, {0, 1, 2}, {0, 1, 2}, 3, "test", -1);
        CHECK_FALSE(r.auc.has_value());
    }
    SUBCASE("json carries the flat keys") {
        MetricsReport r;
        r.accuracy = 0.5;
        r.f1_macro = 0.25;
        r.split = "test";
        const std::string j = metrics_to_json(r);
        CHECK(j.find("\"accuracy\"") != std::string::npos);
        CHECK(j.find("\"auc\"") != std::string::npos);
        CHECK(j.find("\"f1_macro\"") != std::string::npos);
        CHECK(j.find("\"split\"") != std::string::npos);
        CHECK(j.find("null") != std::string::npos);
    }
}
