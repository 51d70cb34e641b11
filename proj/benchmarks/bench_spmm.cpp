// Propagation-operator cost across graph sizes.
#include <benchmark/benchmark.h>

#include <cstdint>

#include "gnfbc/graph.hpp"
#include "gnfbc/matrix.hpp"
#include "gnfbc/rng.hpp"
#include "gnfbc/tape.hpp"

using namespace gnfbc;

namespace {

SparseGraph random_graph(SeededRng& rng, std::size_t n, std::size_t extra) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t i = 1; i < n; ++i) {
        edges.emplace_back(static_cast<std::uint32_t>(rng.below(i)), i);
    }
    for (std::size_t k = 0; k < extra; ++k) {
        const auto u = static_cast<std::uint32_t>(rng.below(n));
        const auto v = static_cast<std::uint32_t>(rng.below(n));
        if (u != v) edges.emplace_back(u, v);
    }
    return SparseGraph::from_edges(n, edges);
}

DenseMatrix random_features(SeededRng& rng, std::size_t n, std::size_t d) {
    DenseMatrix x(n, d);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
    return x;
}

void bm_spmm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    SeededRng rng(7);
    const SparseGraph g = random_graph(rng, n, 5 * n);
    const SparseMatrix adj = normalize_adjacency(g);
    const DenseMatrix x = random_features(rng, n, 32);
    DenseMatrix out;
    for (auto _ : state) {
        adj.multiply(x, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(static_cast<std::int64_t>(n));
}

void bm_tape_matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    SeededRng rng(7);
    const DenseMatrix a = random_features(rng, n, 64);
    const DenseMatrix b = random_features(rng, 64, 32);
    for (auto _ : state) {
        Tape t;
        const Value out = t.matmul(t.leaf(a), t.leaf(b));
        benchmark::DoNotOptimize(t.value(out).data());
    }
}

} // namespace

BENCHMARK(bm_spmm)->Arg(1000)->Arg(4000)->Arg(16000)->Complexity(benchmark::oN);
BENCHMARK(bm_tape_matmul)->Arg(256)->Arg(1024);
