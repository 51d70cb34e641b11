#include "gnfbc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "gnfbc/errors.hpp"

namespace gnfbc {

SparseGraph SparseGraph::from_edges(std::size_t num_nodes, const EdgeList& edges) {
    std::vector<std::set<std::uint32_t>> adj(num_nodes);
    for (const auto& [u, v] : edges) {
        if (u >= num_nodes || v >= num_nodes) {
            throw ValidationError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                                  ") references a node >= " + std::to_string(num_nodes));
        }
        if (u == v) continue;
        adj[u].insert(v);
        adj[v].insert(u);
    }

    SparseGraph g;
    g.offsets_.assign(num_nodes + 1, 0);
    for (std::size_t i = 0; i < num_nodes; ++i) {
        g.offsets_[i + 1] = g.offsets_[i] + adj[i].size();
    }
    g.cols_.reserve(g.offsets_[num_nodes]);
    for (std::size_t i = 0; i < num_nodes; ++i) {
        g.cols_.insert(g.cols_.end(), adj[i].begin(), adj[i].end());
    }
    return g;
}

bool SparseGraph::has_edge(std::uint32_t u, std::uint32_t v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::optional<std::size_t> SparseGraph::entry_index(std::size_t u, std::size_t v) const {
    auto nb = neighbors(u);
    auto it = std::lower_bound(nb.begin(), nb.end(), static_cast<std::uint32_t>(v));
    if (it == nb.end() || *it != v) return std::nullopt;
    return offsets_[u] + static_cast<std::size_t>(it - nb.begin());
}

EdgeList SparseGraph::edge_pairs() const {
    EdgeList out;
    out.reserve(num_edges());
    for (std::size_t i = 0; i < num_nodes(); ++i) {
        for (std::uint32_t j : neighbors(i)) {
            if (j > i) out.emplace_back(static_cast<std::uint32_t>(i), j);
        }
    }
    return out;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    SparseMatrix m;
    m.rows = m.cols = n;
    m.offsets.resize(n + 1);
    m.col.resize(n);
    m.val.assign(n, 1.0);
    for (std::size_t i = 0; i <= n; ++i) m.offsets[i] = i;
    for (std::size_t i = 0; i < n; ++i) m.col[i] = static_cast<std::uint32_t>(i);
    return m;
}

SparseMatrix SparseMatrix::transposed() const {
    SparseMatrix t;
    t.rows = cols;
    t.cols = rows;
    t.offsets.assign(cols + 1, 0);
    for (std::uint32_t c : col) t.offsets[c + 1]++;
    for (std::size_t i = 0; i < cols; ++i) t.offsets[i + 1] += t.offsets[i];
    t.col.resize(col.size());
    t.val.resize(val.size());
    std::vector<std::size_t> cursor(t.offsets.begin(), t.offsets.end() - 1);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
            const std::size_t dst = cursor[col[k]]++;
            t.col[dst] = static_cast<std::uint32_t>(r);
            t.val[dst] = val[k];
        }
    }
    return t;
}

DenseMatrix SparseMatrix::densify() const {
    DenseMatrix d(rows, cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
            d(r, col[k]) += val[k];
        }
    }
    return d;
}

void SparseMatrix::multiply(const DenseMatrix& h, DenseMatrix& out) const {
    if (h.rows() != cols) {
        throw DimensionError("spmm: sparse is " + std::to_string(rows) + "x" + std::to_string(cols) +
                             " but dense has " + std::to_string(h.rows()) + " rows");
    }
    const std::size_t d = h.cols();
    out = DenseMatrix(rows, d, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double* dst = out.row(r);
        for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
            const double w = val[k];
            const double* src = h.row(col[k]);
            for (std::size_t c = 0; c < d; ++c) dst[c] += w * src[c];
        }
    }
}

SparseMatrix normalize_adjacency(const SparseGraph& g) {
    const std::size_t n = g.num_nodes();
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i)) + 1.0);
    }

    SparseMatrix m;
    m.rows = m.cols = n;
    m.offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) m.offsets[i + 1] = m.offsets[i] + g.degree(i) + 1;
    m.col.resize(m.offsets[n]);
    m.val.resize(m.offsets[n]);

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = m.offsets[i];
        bool self_written = false;
        for (std::uint32_t j : g.neighbors(i)) {
            if (!self_written && j > i) {
                m.col[k] = static_cast<std::uint32_t>(i);
                m.val[k] = inv_sqrt[i] * inv_sqrt[i];
                ++k;
                self_written = true;
            }
            m.col[k] = j;
            m.val[k] = inv_sqrt[i] * inv_sqrt[j];
            ++k;
        }
        if (!self_written) {
            m.col[k] = static_cast<std::uint32_t>(i);
            m.val[k] = inv_sqrt[i] * inv_sqrt[i];
        }
    }
    return m;
}

SparseMatrix mean_aggregation(const SparseGraph& g) {
    const std::size_t n = g.num_nodes();
    SparseMatrix m;
    m.rows = m.cols = n;
    m.offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        m.offsets[i + 1] = m.offsets[i] + std::max<std::size_t>(g.degree(i), 1);
    }
    m.col.resize(m.offsets[n]);
    m.val.resize(m.offsets[n]);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = m.offsets[i];
        const std::size_t deg = g.degree(i);
        if (deg == 0) {
            m.col[k] = static_cast<std::uint32_t>(i);
            m.val[k] = 1.0;
            continue;
        }
        const double w = 1.0 / static_cast<double>(deg);
        for (std::uint32_t j : g.neighbors(i)) {
            m.col[k] = j;
            m.val[k] = w;
            ++k;
        }
    }
    return m;
}

double edge_homophily(const SparseGraph& g, const Labels& labels) {
    const std::size_t e = g.num_edges();
    if (e == 0) throw ValidationError("edge_homophily: graph has no edges");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        for (std::uint32_t j : g.neighbors(i)) {
            if (j > i && labels[i] == labels[j]) ++agree;
        }
    }
    return static_cast<double>(agree) / static_cast<double>(e);
}

std::vector<std::size_t> DirectedGraph::in_degrees() const {
    std::vector<std::size_t> d(num_nodes, 0);
    for (const auto& [u, v] : arcs) d[v]++;
    return d;
}

std::vector<std::size_t> DirectedGraph::out_degrees() const {
    std::vector<std::size_t> d(num_nodes, 0);
    for (const auto& [u, v] : arcs) d[u]++;
    return d;
}

} // namespace gnfbc
