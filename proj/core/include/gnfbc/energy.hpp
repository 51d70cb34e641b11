#pragma once

#include <cstddef>
#include <vector>

#include "gnfbc/graph.hpp"
#include "gnfbc/matrix.hpp"

namespace gnfbc {

/// Local feature-smoothness energy at node i:
///   (1/4) * sum_{j in N(i)} || x_i/sqrt(d_i) - x_j/sqrt(d_j) ||^2.
/// Isolated nodes have energy 0.
double dirichlet_energy_node(const SparseGraph& g, const DenseMatrix& x, std::size_t i);

/// dirichlet_energy_node for every node.
std::vector<double> dirichlet_energy(const SparseGraph& g, const DenseMatrix& x);

/// Directed total energy: for every arc u->v,
///   (1/4) * || x_v/sqrt(in_deg(v)) - x_u/sqrt(out_deg(u)) ||^2.
double dirichlet_energy_directed(const DirectedGraph& g, const DenseMatrix& x);

/// Per-node feedback coefficients: beta_raw = 1 - minmax(E), then affinely
/// mapped into [floor, ceil]. All-equal energies normalize to 0.5.
std::vector<double> compute_beta(const std::vector<double>& energies,
                                 double floor = 0.05, double ceil = 0.95);

} // namespace gnfbc
