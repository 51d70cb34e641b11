// Forward-pass cost: plain backbone vs the blended twin-corrected pass.
#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "gnfbc/dataset.hpp"
#include "gnfbc/energy.hpp"
#include "gnfbc/layers.hpp"
#include "gnfbc/rng.hpp"

using namespace gnfbc;

namespace {

struct Fixture {
    Dataset ds;
    GraphContext ctx;
    ModelStack stack;
    std::shared_ptr<const std::vector<double>> beta;

    Fixture(LayerKind kind, std::size_t n) {
        SynthConfig cfg;
        cfg.num_nodes = n;
        cfg.seed = 3;
        ds = generate_synthetic(cfg);
        ctx = GraphContext::build(ds.graph);
        SeededRng rng(3);
        stack = make_stack({{kind, ds.features.cols(), 16},
                            {kind, 16, ds.num_classes(), Activation::None}},
                           rng);
        beta = std::make_shared<const std::vector<double>>(
            compute_beta(dirichlet_energy(ds.graph, ds.features)));
    }
};

void bm_forward_backbone(benchmark::State& state) {
    const Fixture f(static_cast<LayerKind>(state.range(0)),
                    static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        Tape t;
        const StackValues sv = push_params_frozen(t, f.stack);
        const ForwardOutput out = forward_backbone(t, f.stack, t.leaf(f.ds.features),
                                                   f.ctx, sv);
        benchmark::DoNotOptimize(t.value(out.probs).data());
    }
}

void bm_forward_corrected(benchmark::State& state) {
    const Fixture f(static_cast<LayerKind>(state.range(0)),
                    static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        Tape t;
        const StackValues sv = push_params_frozen(t, f.stack);
        const ForwardOutput out = forward_corrected(t, f.stack, t.leaf(f.ds.features),
                                                    f.ctx, sv, f.beta);
        benchmark::DoNotOptimize(t.value(out.probs).data());
    }
}

void backbone_args(benchmark::internal::Benchmark* b) {
    for (const LayerKind kind :
         {LayerKind::GCN, LayerKind::SGC, LayerKind::SAGE, LayerKind::GAT}) {
        b->Args({static_cast<long>(kind), 1000});
    }
}

} // namespace

BENCHMARK(bm_forward_backbone)->Apply(backbone_args);
BENCHMARK(bm_forward_corrected)->Apply(backbone_args);
