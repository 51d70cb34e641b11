// Shared helpers for the test suites: random instances and dense views.
#pragma once

#include <cstdint>
#include <vector>

#include "gnfbc/graph.hpp"
#include "gnfbc/matrix.hpp"
#include "gnfbc/rng.hpp"

namespace testutil {

inline gnfbc::DenseMatrix random_matrix(gnfbc::SeededRng& rng, std::size_t rows,
                                        std::size_t cols, double lo = -1.0,
                                        double hi = 1.0) {
    gnfbc::DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

// Raw pair list with duplicates and self-pairs allowed; exercises dedup.
inline gnfbc::EdgeList random_pairs(gnfbc::SeededRng& rng, std::size_t n,
                                    std::size_t count) {
    gnfbc::EdgeList edges;
    edges.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        edges.emplace_back(static_cast<std::uint32_t>(rng.below(n)),
                           static_cast<std::uint32_t>(rng.below(n)));
    }
    return edges;
}

// Connected-ish random simple graph: a path backbone plus random extras.
inline gnfbc::SparseGraph random_graph(gnfbc::SeededRng& rng, std::size_t n,
                                       std::size_t extra) {
    gnfbc::EdgeList edges;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1));
    }
    for (auto& e : random_pairs(rng, n, extra)) edges.push_back(e);
    return gnfbc::SparseGraph::from_edges(n, edges);
}

inline std::vector<std::vector<int>> dense_adjacency(const gnfbc::SparseGraph& g) {
    std::vector<std::vector<int>> adj(g.num_nodes(), std::vector<int>(g.num_nodes(), 0));
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        for (std::uint32_t j : g.neighbors(i)) adj[i][j] = 1;
    }
    return adj;
}

inline std::vector<int> random_labels(gnfbc::SeededRng& rng, std::size_t n,
                                      std::size_t num_classes) {
    std::vector<int> labels(n);
    for (auto& y : labels) y = static_cast<int>(rng.below(num_classes));
    return labels;
}

} // namespace testutil
