#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gnfbc/matrix.hpp"

namespace gnfbc {

using EdgeList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

/// Undirected simple graph in CSR form. Neighbor lists are sorted, hold no
/// self-loops and no duplicates, and are symmetric: j in N(i) iff i in N(j).
class SparseGraph {
public:
    SparseGraph() = default;

    /// Builds from raw (u,v) pairs. Self-pairs and duplicates in the input
    /// are dropped; indices >= num_nodes throw.
    static SparseGraph from_edges(std::size_t num_nodes, const EdgeList& edges);

    std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    /// Undirected edge count |E|; the CSR stores 2|E| directed entries.
    std::size_t num_edges() const { return directed_entries() / 2; }
    std::size_t directed_entries() const { return cols_.size(); }

    std::size_t degree(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
    std::span<const std::uint32_t> neighbors(std::size_t i) const {
        return {cols_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }

    const std::vector<std::size_t>& offsets() const { return offsets_; }
    const std::vector<std::uint32_t>& cols() const { return cols_; }

    /// First CSR slot of node i's neighbor list.
    std::size_t offset(std::size_t i) const { return offsets_[i]; }
    /// CSR slot of the directed entry (u, v), or nullopt when v is not a
    /// neighbor of u.
    std::optional<std::size_t> entry_index(std::size_t u, std::size_t v) const;

    bool has_edge(std::uint32_t u, std::uint32_t v) const;

    /// Undirected edges, each listed once with u < v.
    EdgeList edge_pairs() const;

private:
    std::vector<std::size_t> offsets_{0};
    std::vector<std::uint32_t> cols_;
};

/// CSR matrix with explicit values; used for the normalized adjacency and
/// the neighbor-mean operator.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> offsets;
    std::vector<std::uint32_t> col;
    std::vector<double> val;

    static SparseMatrix identity(std::size_t n);
    SparseMatrix transposed() const;
    DenseMatrix densify() const;

    /// out = this * h. out is resized to rows x h.cols().
    void multiply(const DenseMatrix& h, DenseMatrix& out) const;
};

/// Symmetric GCN normalization: A_hat(i,j) = 1/sqrt((d_i+1)(d_j+1)) for
/// j in N(i) or j == i. Row i carries exactly d_i + 1 entries.
SparseMatrix normalize_adjacency(const SparseGraph& g);

/// Row-stochastic neighbor mean: row i holds 1/d_i at each j in N(i).
/// An isolated node falls back to itself (single entry 1.0), so the mean
/// of an empty neighborhood is the node's own features.
SparseMatrix mean_aggregation(const SparseGraph& g);

/// Fraction of undirected edges whose endpoints share a label.
/// Throws ValidationError when the graph has no edges.
double edge_homophily(const SparseGraph& g, const Labels& labels);

/// Directed graph as an arc list; only used by the directed Dirichlet
/// energy diagnostic.
struct DirectedGraph {
    std::size_t num_nodes = 0;
    EdgeList arcs; // (u, v) means u -> v

    std::vector<std::size_t> in_degrees() const;
    std::vector<std::size_t> out_degrees() const;
};

} // namespace gnfbc
