// Per-epoch training cost of the corrected model vs the plain backbone.
#include <benchmark/benchmark.h>

#include "gnfbc/dataset.hpp"
#include "gnfbc/train.hpp"

using namespace gnfbc;

namespace {

Dataset bench_dataset(std::size_t n) {
    SynthConfig cfg;
    cfg.num_nodes = n;
    cfg.homophily = 0.9;
    cfg.seed = 3;
    return generate_synthetic(cfg);
}

void bm_train_epochs(benchmark::State& state) {
    const Dataset ds = bench_dataset(static_cast<std::size_t>(state.range(1)));
    TrainConfig cfg;
    cfg.mode = static_cast<TrainMode>(state.range(0));
    cfg.hidden_dims = {16};
    cfg.epochs = 5;
    cfg.patience = 5;
    cfg.loss.lambda = cfg.mode == TrainMode::Gnfbc ? 1e-3 : 0.0;
    for (auto _ : state) {
        const TrainResult res = train(ds, cfg);
        benchmark::DoNotOptimize(res.record.test.accuracy);
    }
    state.counters["epochs"] = static_cast<double>(cfg.epochs);
}

} // namespace

BENCHMARK(bm_train_epochs)
    ->Args({static_cast<long>(TrainMode::Gnfbc), 1000})
    ->Args({static_cast<long>(TrainMode::AwareOnly), 1000})
    ->Unit(benchmark::kMillisecond);
