#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "gnfbc/errors.hpp"
#include "gnfbc/layers.hpp"
#include "gnfbc/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gnfbc;

namespace {

const std::vector<LayerKind> kAllKinds = {LayerKind::GCN, LayerKind::SGC, LayerKind::SAGE,
                                          LayerKind::GAT, LayerKind::Linear};

LayerParams leaf_params(Tape& t, const ModelStack& stack, std::size_t layer) {
    LayerParams p;
    const std::size_t base = stack.param_offset(layer);
    for (std::size_t k = 0; k < layer_param_count(stack.specs[layer].kind); ++k) {
        p.tensors.push_back(t.leaf(stack.params[base + k]));
    }
    return p;
}

} // namespace

TEST_CASE("stack construction") {
    SeededRng rng(0);
    SUBCASE("dims must chain") {
        CHECK_THROWS_AS(make_stack({{LayerKind::GCN, 4, 8}, {LayerKind::GCN, 7, 3}}, rng),
                        DimensionError);
    }
    SUBCASE("parameter tensor counts per kind") {
        CHECK(layer_param_count(LayerKind::GCN) == 1);
        CHECK(layer_param_count(LayerKind::SGC) == 1);
        CHECK(layer_param_count(LayerKind::Linear) == 1);
        CHECK(layer_param_count(LayerKind::SAGE) == 2);
        CHECK(layer_param_count(LayerKind::GAT) == 3);
        const ModelStack s =
            make_stack({{LayerKind::SAGE, 4, 8}, {LayerKind::GAT, 8, 3}}, rng);
        CHECK(s.params.size() == 5);
        CHECK(s.param_offset(1) == 2);
        CHECK(s.params[3].rows() == 3); // attention vectors are out_dim x 1
        CHECK(s.params[3].cols() == 1);
    }
    SUBCASE("same seed gives the same stack") {
        SeededRng a(4), b(4);
        const ModelStack s1 = make_stack({{LayerKind::GCN, 5, 2}}, a);
        const ModelStack s2 = make_stack({{LayerKind::GCN, 5, 2}}, b);
        CHECK(s1.params[0] == s2.params[0]);
    }
}

TEST_CASE("aware layer forwards") {
    SeededRng rng(1);
    SUBCASE("GCN on the edgeless graph is a plain linear map") {
        const GraphContext ctx = GraphContext::edgeless(4);
        const DenseMatrix h = testutil::random_matrix(rng, 4, 3);
        const DenseMatrix w = testutil::random_matrix(rng, 3, 2);
        ModelStack stack;
        stack.specs = {{LayerKind::GCN, 3, 2}};
        stack.params = {w};
        stack.param_offsets = {0};

        Tape t;
        const Value out =
            forward_aware(t, stack.specs[0], t.leaf(h), ctx, leaf_params(t, stack, 0));
        const DenseMatrix want = oracle::relu(oracle::matmul(h, w));
        CHECK(t.value(out) == want);
    }
    SUBCASE("SAGE on K2 sums self and neighbor mean") {
        const GraphContext ctx = GraphContext::build(SparseGraph::from_edges(2, {{0, 1}}));
        DenseMatrix h(2, 1);
        h(0, 0) = 1.0;
        h(1, 0) = 3.0;
        ModelStack stack;
        stack.specs = {{LayerKind::SAGE, 1, 1, Activation::None}};
        stack.params = {DenseMatrix(1, 1, 1.0), DenseMatrix(1, 1, 1.0)};
        stack.param_offsets = {0};

        Tape t;
        const Value out =
            forward_aware(t, stack.specs[0], t.leaf(h), ctx, leaf_params(t, stack, 0));
        CHECK(t.value(out)(0, 0) == doctest::Approx(4.0).epsilon(1e-15));
        CHECK(t.value(out)(1, 0) == doctest::Approx(4.0).epsilon(1e-15));
    }
    SUBCASE("GAT with zero attention reduces to the neighborhood-and-self mean") {
        const SparseGraph g = SparseGraph::from_edges(3, {{0, 1}, {1, 2}});
        const GraphContext ctx = GraphContext::build(g);
        const DenseMatrix h = testutil::random_matrix(rng, 3, 2);
        const DenseMatrix w = testutil::random_matrix(rng, 2, 2);
        ModelStack stack;
        stack.specs = {{LayerKind::GAT, 2, 2, Activation::None}};
        stack.params = {w, DenseMatrix(2, 1, 0.0), DenseMatrix(2, 1, 0.0)};
        stack.param_offsets = {0};

        Tape t;
        const Value out =
            forward_aware(t, stack.specs[0], t.leaf(h), ctx, leaf_params(t, stack, 0));
        const DenseMatrix hw = oracle::matmul(h, w);
        // Node 1 sees {0, 1, 2}; nodes 0 and 2 see themselves plus node 1.
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(t.value(out)(0, j) ==
                  doctest::Approx(0.5 * (hw(0, j) + hw(1, j))).epsilon(1e-13));
            CHECK(t.value(out)(1, j) ==
                  doctest::Approx((hw(0, j) + hw(1, j) + hw(2, j)) / 3.0).epsilon(1e-13));
        }
    }
    SUBCASE("SGC propagates before the linear map") {
        const SparseGraph g = SparseGraph::from_edges(2, {{0, 1}});
        const GraphContext ctx = GraphContext::build(g);
        DenseMatrix h(2, 1);
        h(0, 0) = 1.0;
        ModelStack stack;
        stack.specs = {{LayerKind::SGC, 1, 1, Activation::None, 2}};
        stack.params = {DenseMatrix(1, 1, 1.0)};
        stack.param_offsets = {0};

        Tape t;
        const Value out =
            forward_aware(t, stack.specs[0], t.leaf(h), ctx, leaf_params(t, stack, 0));
        // K2's normalized operator averages endpoints; twice over it is stationary.
        CHECK(t.value(out)(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(t.value(out)(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
    }
}

TEST_CASE("agnostic twin equals the aware path on the identity context") {
    SeededRng rng(2);
    for (const LayerKind kind : kAllKinds) {
        for (int draw = 0; draw < 3; ++draw) {
            ModelStack stack = make_stack({{kind, 4, 3}}, rng);
            const DenseMatrix h = testutil::random_matrix(rng, 5, 4);
            const GraphContext ctx = GraphContext::edgeless(5);

            Tape ta;
            const Value aware =
                forward_aware(ta, stack.specs[0], ta.leaf(h), ctx, leaf_params(ta, stack, 0));
            Tape tb;
            const Value agn =
                forward_agnostic(tb, stack.specs[0], tb.leaf(h), leaf_params(tb, stack, 0));
            CHECK(ta.value(aware) == tb.value(agn));
        }
    }
}

TEST_CASE("agnostic two-layer stack is the plain feature model") {
    SeededRng rng(3);
    const ModelStack stack =
        make_stack({{LayerKind::GCN, 4, 6}, {LayerKind::GCN, 6, 3, Activation::None}}, rng);
    const DenseMatrix x = testutil::random_matrix(rng, 7, 4);
    const GraphContext edgeless = GraphContext::edgeless(7);

    Tape t;
    const StackValues sv = push_params_frozen(t, stack);
    const ForwardOutput out = forward_backbone(t, stack, t.leaf(x), edgeless, sv);

    const DenseMatrix want = oracle::softmax_rows(
        oracle::matmul(oracle::relu(oracle::matmul(x, stack.params[0])), stack.params[1]));
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(t.value(out.probs).data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-13));
    }
}

TEST_CASE("residual and correction") {
    SUBCASE("residual is the paths' difference") {
        const DenseMatrix r = residual(DenseMatrix(1, 1, 0.8), DenseMatrix(1, 1, 0.5));
        CHECK(r(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
    }
    SUBCASE("identity context zeroes the residual for every kind") {
        SeededRng rng(4);
        for (const LayerKind kind : kAllKinds) {
            ModelStack stack = make_stack({{kind, 3, 2}}, rng);
            const DenseMatrix h = testutil::random_matrix(rng, 4, 3);
            Tape t;
            const LayerPair pair = forward_layer_pair(t, stack.specs[0], t.leaf(h),
                                                      GraphContext::edgeless(4),
                                                      leaf_params(t, stack, 0));
            CHECK(pair.aware.id == pair.agnostic.id);
            const DenseMatrix r = residual(t.value(pair.aware), t.value(pair.agnostic));
            for (std::size_t i = 0; i < r.size(); ++i) CHECK(r.data()[i] == 0.0);
        }
    }
    SUBCASE("correction blends rows by beta") {
        const DenseMatrix out = apply_correction(DenseMatrix(1, 1, 0.8),
                                                 DenseMatrix(1, 1, 0.5), {0.4});
        CHECK(out(0, 0) == doctest::Approx(0.68).epsilon(1e-15));
        const DenseMatrix keep = apply_correction(DenseMatrix(1, 1, 0.8),
                                                  DenseMatrix(1, 1, 0.5), {0.0});
        CHECK(keep(0, 0) == 0.8);
        const DenseMatrix swap = apply_correction(DenseMatrix(1, 1, 0.8),
                                                  DenseMatrix(1, 1, 0.5), {1.0});
        CHECK(swap(0, 0) == 0.5);
    }
}

TEST_CASE("corrected forward") {
    SeededRng rng(5);
    const SparseGraph path = SparseGraph::from_edges(3, {{0, 1}, {1, 2}});
    const GraphContext ctx = GraphContext::build(path);

    SUBCASE("matches the straight-line dense reimplementation") {
        SeededRng seed0(0);
        const ModelStack stack = make_stack(
            {{LayerKind::GCN, 2, 4}, {LayerKind::GCN, 4, 2, Activation::None}}, seed0);
        const DenseMatrix x = testutil::random_matrix(rng, 3, 2);
        const auto beta = std::make_shared<const std::vector<double>>(
            std::vector<double>{0.3, 0.6, 0.9});

        Tape t;
        const StackValues sv = push_params_frozen(t, stack);
        const ForwardOutput out = forward_corrected(t, stack, t.leaf(x), ctx, sv, beta);

        const DenseMatrix want = oracle::corrected_gcn2_forward(
            x, testutil::dense_adjacency(path), stack.params[0], stack.params[1], *beta);
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(t.value(out.probs).data()[i] ==
                  doctest::Approx(want.data()[i]).epsilon(1e-12));
        }
    }
    SUBCASE("edgeless graph collapses to the agnostic model for any beta") {
        const ModelStack stack =
            make_stack({{LayerKind::SAGE, 2, 4}, {LayerKind::SAGE, 4, 2, Activation::None}}, rng);
        const DenseMatrix x = testutil::random_matrix(rng, 5, 2);
        const GraphContext edgeless = GraphContext::edgeless(5);
        const auto beta = std::make_shared<const std::vector<double>>(
            std::vector<double>{0.1, 0.9, 0.4, 0.7, 0.2});

        Tape t;
        const StackValues sv = push_params_frozen(t, stack);
        const ForwardOutput corrected = forward_corrected(t, stack, t.leaf(x), edgeless, sv, beta);
        Tape t2;
        const StackValues sv2 = push_params_frozen(t2, stack);
        const ForwardOutput agnostic = forward_backbone(t2, stack, t2.leaf(x), edgeless, sv2);
        CHECK(t.value(corrected.probs) == t2.value(agnostic.probs));
    }
    SUBCASE("beta limits reproduce the pure paths") {
        for (const LayerKind kind : kAllKinds) {
            const ModelStack stack =
                make_stack({{kind, 2, 4}, {kind, 4, 2, Activation::None}}, rng);
            const DenseMatrix x = testutil::random_matrix(rng, 3, 2);

            Tape t;
            const StackValues sv = push_params_frozen(t, stack);
            const ForwardOutput zero = forward_corrected(
                t, stack, t.leaf(x), ctx, sv,
                std::make_shared<const std::vector<double>>(3, 0.0));
            Tape t2;
            const StackValues sv2 = push_params_frozen(t2, stack);
            const ForwardOutput aware = forward_backbone(t2, stack, t2.leaf(x), ctx, sv2);
            for (std::size_t i = 0; i < t.value(zero.probs).size(); ++i) {
                CHECK(t.value(zero.probs).data()[i] ==
                      doctest::Approx(t2.value(aware.probs).data()[i]).epsilon(1e-12));
            }

            Tape t3;
            const StackValues sv3 = push_params_frozen(t3, stack);
            const ForwardOutput one = forward_corrected(
                t3, stack, t3.leaf(x), ctx, sv3,
                std::make_shared<const std::vector<double>>(3, 1.0));
            Tape t4;
            const StackValues sv4 = push_params_frozen(t4, stack);
            const ForwardOutput agn =
                forward_backbone(t4, stack, t4.leaf(x), GraphContext::edgeless(3), sv4);
            for (std::size_t i = 0; i < t3.value(one.probs).size(); ++i) {
                CHECK(t3.value(one.probs).data()[i] ==
                      doctest::Approx(t4.value(agn.probs).data()[i]).epsilon(1e-12));
            }
        }
    }
    SUBCASE("probability rows sum to one") {
        const ModelStack stack =
            make_stack({{LayerKind::GAT, 2, 3}, {LayerKind::GAT, 3, 2, Activation::None}}, rng);
        const DenseMatrix x = testutil::random_matrix(rng, 3, 2);
        Tape t;
        const StackValues sv = push_params_frozen(t, stack);
        const ForwardOutput out = forward_corrected(
            t, stack, t.leaf(x), ctx, sv,
            std::make_shared<const std::vector<double>>(3, 0.5));
        for (std::size_t i = 0; i < 3; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < 2; ++j) row += t.value(out.probs)(i, j);
            CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("attention extraction") {
    SeededRng rng(6);
    const SparseGraph g = SparseGraph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
    const GraphContext ctx = GraphContext::build(g);
    const DenseMatrix h = testutil::random_matrix(rng, 3, 2);

    SUBCASE("zero attention vectors give uniform coefficients") {
        ModelStack stack = make_stack({{LayerKind::GAT, 2, 4}}, rng);
        stack.params[1].fill(0.0);
        stack.params[2].fill(0.0);
        const GatAttention att = gat_attention(stack, 0, h, ctx);
        REQUIRE(att.alpha.size() == att.structure->entries());
        for (const double a : att.alpha) CHECK(a == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
    SUBCASE("coefficients are a distribution over each neighborhood") {
        const ModelStack stack = make_stack({{LayerKind::GAT, 2, 4}}, rng);
        const GatAttention att = gat_attention(stack, 0, h, ctx);
        for (std::size_t i = 0; i < 3; ++i) {
            double row = 0.0;
            for (std::size_t k = att.structure->offsets[i]; k < att.structure->offsets[i + 1];
                 ++k) {
                CHECK(att.alpha[k] > 0.0);
                row += att.alpha[k];
            }
            CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("non-attention layers are rejected") {
        const ModelStack stack = make_stack({{LayerKind::GCN, 2, 4}}, rng);
        CHECK_THROWS_AS(gat_attention(stack, 0, h, ctx), ValidationError);
    }
}
