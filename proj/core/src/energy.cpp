#include "gnfbc/energy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gnfbc/errors.hpp"

namespace gnfbc {

double dirichlet_energy_node(const SparseGraph& g, const DenseMatrix& x, std::size_t i) {
    if (x.rows() != g.num_nodes()) {
        throw DimensionError("dirichlet_energy: " + std::to_string(x.rows()) +
                             " feature rows for " + std::to_string(g.num_nodes()) + " nodes");
    }
    const double inv_i = 1.0 / std::sqrt(static_cast<double>(g.degree(i)));
    const double* xi = x.row(i);
    double total = 0.0;
    for (std::uint32_t j : g.neighbors(i)) {
        const double inv_j = 1.0 / std::sqrt(static_cast<double>(g.degree(j)));
        const double* xj = x.row(j);
        double acc = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double d = xi[c] * inv_i - xj[c] * inv_j;
            acc += d * d;
        }
        total += acc;
    }
    return 0.25 * total;
}

std::vector<double> dirichlet_energy(const SparseGraph& g, const DenseMatrix& x) {
    std::vector<double> out(g.num_nodes());
    for (std::size_t i = 0; i < g.num_nodes(); ++i) out[i] = dirichlet_energy_node(g, x, i);
    return out;
}

double dirichlet_energy_directed(const DirectedGraph& g, const DenseMatrix& x) {
    if (x.rows() != g.num_nodes) {
        throw DimensionError("dirichlet_energy_directed: " + std::to_string(x.rows()) +
                             " feature rows for " + std::to_string(g.num_nodes) + " nodes");
    }
    const std::vector<std::size_t> in = g.in_degrees();
    const std::vector<std::size_t> out = g.out_degrees();
    double total = 0.0;
    for (const auto& [u, v] : g.arcs) {
        if (out[u] == 0 || in[v] == 0) {
            throw ValidationError("dirichlet_energy_directed: zero-degree endpoint on arc " +
                                  std::to_string(u) + "->" + std::to_string(v));
        }
        const double inv_v = 1.0 / std::sqrt(static_cast<double>(in[v]));
        const double inv_u = 1.0 / std::sqrt(static_cast<double>(out[u]));
        const double* xv = x.row(v);
        const double* xu = x.row(u);
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double d = xv[c] * inv_v - xu[c] * inv_u;
            total += d * d;
        }
    }
    return 0.25 * total;
}

std::vector<double> compute_beta(const std::vector<double>& energies,
                                 double floor, double ceil) {
    if (energies.empty()) throw ValidationError("compute_beta: no energies");
    if (floor > ceil) {
        throw ValidationError("compute_beta: floor " + std::to_string(floor) +
                              " exceeds ceil " + std::to_string(ceil));
    }
    const auto [lo_it, hi_it] = std::minmax_element(energies.begin(), energies.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> beta(energies.size());
    for (std::size_t i = 0; i < energies.size(); ++i) {
        const double norm = (hi > lo) ? (energies[i] - lo) / (hi - lo) : 0.5;
        beta[i] = floor + (ceil - floor) * (1.0 - norm);
    }
    return beta;
}

} // namespace gnfbc
