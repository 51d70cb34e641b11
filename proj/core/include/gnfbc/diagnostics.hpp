#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gnfbc/graph.hpp"
#include "gnfbc/layers.hpp"
#include "gnfbc/matrix.hpp"

namespace gnfbc {

/// Neighbor-label correlation hypothesis. rho is stored per directed CSR
/// entry of the graph it was built against: rho[k] belongs to the k-th
/// (node, neighbor) adjacency slot, so rho_ij and rho_ji are independent.
struct CorrelationModel {
    std::vector<double> rho;
    double sigma2 = 1.0;
};

/// All-zero correlations for g.
CorrelationModel zero_correlation(const SparseGraph& g);

/// Uniform rho = clamp(2*edge_homophily - 1, -0.9, 0.9) on every slot.
CorrelationModel estimate_rho_global(const SparseGraph& g, const Labels& labels,
                                     double sigma2 = 1.0);

/// Per-edge override file: lines "u v rho", '#' comments. Every named pair
/// must be an edge of g; the directed slot (u, v) is set, others stay 0.
CorrelationModel load_rho_file(const std::string& path, const SparseGraph& g,
                               double sigma2 = 1.0);

/// eps_i = yhat_i + sum_{j in N(i)} rho_ij * (y_j - yhat_j).
std::vector<double> autocorrelated_error(const std::vector<double>& yhat,
                                         const std::vector<double>& y,
                                         const SparseGraph& g,
                                         const CorrelationModel& corr);

struct BiasReport {
    double total = 0.0;
    std::vector<double> per_node;       // contribution of each node to total
    std::vector<double> epsilon;        // correlation-adjusted predictions
    double sigma2 = 1.0;
    std::optional<double> kappa;        // set when rho came from attention
};

/// Gap between the plain squared-error objective and the one evaluated
/// against the correlation-adjusted predictions:
///   total = sum_i (y_i-yhat_i)^2/(2s2) - (y_i-eps_i)^2/(2s2(1-rho_i^2)).
/// Exactly zero when every rho is zero.
BiasReport bias_estimate(const std::vector<double>& yhat, const std::vector<double>& y,
                         const SparseGraph& g, const CorrelationModel& corr);

/// rho' = rho * (1 - gamma).
double adjusted_correlation(double rho, double gamma);

/// rho_ij = kappa * alpha_ij on neighbor slots (attention self terms are
/// dropped). Requires kappa^2 * sum_j alpha_ij^2 < 1 at every node.
CorrelationModel gat_rho_from_attention(const GatAttention& attention,
                                        const SparseGraph& g, double kappa,
                                        double sigma2 = 1.0);

/// Flat JSON object: total, per_node, epsilon, sigma2, kappa (null unless
/// attention-derived).
std::string bias_to_json(const BiasReport& r);

} // namespace gnfbc
