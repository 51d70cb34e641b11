#include "gnfbc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gnfbc/errors.hpp"

namespace gnfbc {

namespace {

constexpr double kRhoSquaredLimit = 0.99;

void check_lengths(const std::vector<double>& yhat, const std::vector<double>& y,
                   const SparseGraph& g, const CorrelationModel& corr) {
    if (yhat.size() != g.num_nodes() || y.size() != g.num_nodes()) {
        throw DimensionError("bias diagnostics: prediction/target length must equal node count");
    }
    if (corr.rho.size() != g.directed_entries()) {
        throw DimensionError("bias diagnostics: correlation model has " +
                             std::to_string(corr.rho.size()) + " slots for " +
                             std::to_string(g.directed_entries()) + " adjacency entries");
    }
}

} // namespace

CorrelationModel zero_correlation(const SparseGraph& g) {
    CorrelationModel corr;
    corr.rho.assign(g.directed_entries(), 0.0);
    return corr;
}

CorrelationModel estimate_rho_global(const SparseGraph& g, const Labels& labels,
                                     double sigma2) {
    const double h = edge_homophily(g, labels);
    const double rho = std::clamp(2.0 * h - 1.0, -0.9, 0.9);
    CorrelationModel corr;
    corr.rho.assign(g.directed_entries(), rho);
    corr.sigma2 = sigma2;
    return corr;
}

CorrelationModel load_rho_file(const std::string& path, const SparseGraph& g,
                               double sigma2) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open " + path);
    CorrelationModel corr = zero_correlation(g);
    corr.sigma2 = sigma2;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        long long u = 0, v = 0;
        double rho = 0.0;
        if (!(ss >> u)) continue; // blank line
        if (!(ss >> v >> rho)) {
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": expected \"u v rho\"");
        }
        std::string extra;
        if (ss >> extra) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": trailing content");
        }
        if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= g.num_nodes() ||
            static_cast<std::size_t>(v) >= g.num_nodes()) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": node out of range");
        }
        if (!std::isfinite(rho) || std::abs(rho) >= 1.0) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": rho must lie in (-1,1)");
        }
        const auto slot = g.entry_index(static_cast<std::size_t>(u),
                                        static_cast<std::size_t>(v));
        if (!slot.has_value()) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": no edge " +
                                  std::to_string(u) + "-" + std::to_string(v));
        }
        corr.rho[*slot] = rho;
    }
    return corr;
}

std::vector<double> autocorrelated_error(const std::vector<double>& yhat,
                                         const std::vector<double>& y,
                                         const SparseGraph& g,
                                         const CorrelationModel& corr) {
    check_lengths(yhat, y, g, corr);
    std::vector<double> eps(g.num_nodes());
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        double acc = yhat[i];
        std::size_t k = g.offset(i);
        for (std::uint32_t j : g.neighbors(i)) {
            acc += corr.rho[k] * (y[j] - yhat[j]);
            ++k;
        }
        eps[i] = acc;
    }
    return eps;
}

BiasReport bias_estimate(const std::vector<double>& yhat, const std::vector<double>& y,
                         const SparseGraph& g, const CorrelationModel& corr) {
    check_lengths(yhat, y, g, corr);
    if (corr.sigma2 <= 0.0) throw ValidationError("bias_estimate: sigma2 must be positive");
    BiasReport r;
    r.sigma2 = corr.sigma2;
    r.epsilon = autocorrelated_error(yhat, y, g, corr);
    r.per_node.resize(g.num_nodes());
    const double inv2s2 = 1.0 / (2.0 * corr.sigma2);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        double rho_sq = 0.0;
        std::size_t k = g.offset(i);
        for (std::size_t e = 0; e < g.degree(i); ++e, ++k) rho_sq += corr.rho[k] * corr.rho[k];
        if (rho_sq > kRhoSquaredLimit) {
            throw NumericError("bias_estimate: node " + std::to_string(i) +
                               " has squared correlation " + std::to_string(rho_sq) +
                               " beyond " + std::to_string(kRhoSquaredLimit) +
                               ", bias is singular");
        }
        const double d_plain = y[i] - yhat[i];
        const double d_adj = y[i] - r.epsilon[i];
        // Evaluated as one difference per node so identical terms cancel
        // exactly when the correlations vanish.
        r.per_node[i] = d_plain * d_plain * inv2s2 -
                        d_adj * d_adj * inv2s2 / (1.0 - rho_sq);
        r.total += r.per_node[i];
    }
    return r;
}

double adjusted_correlation(double rho, double gamma) {
    if (!std::isfinite(gamma)) throw ValidationError("adjusted_correlation: gamma not finite");
    return rho * (1.0 - gamma);
}

CorrelationModel gat_rho_from_attention(const GatAttention& attention,
                                        const SparseGraph& g, double kappa,
                                        double sigma2) {
    if (kappa < 0.0) throw ValidationError("gat_rho_from_attention: kappa must be >= 0");
    const AdjStructure& st = *attention.structure;
    if (st.num_nodes != g.num_nodes() || attention.alpha.size() != st.entries()) {
        throw DimensionError("gat_rho_from_attention: attention does not match graph");
    }
    CorrelationModel corr = zero_correlation(g);
    corr.sigma2 = sigma2;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        double rho_sq = 0.0;
        std::size_t slot = g.offset(i);
        for (std::size_t k = st.offsets[i]; k < st.offsets[i + 1]; ++k) {
            if (st.col[k] == i) continue; // attention self term has no edge slot
            const double rho = kappa * attention.alpha[k];
            corr.rho[slot++] = rho;
            rho_sq += rho * rho;
        }
        if (rho_sq >= 1.0) {
            throw NumericError("gat_rho_from_attention: node " + std::to_string(i) +
                               " gets squared correlation " + std::to_string(rho_sq) +
                               " >= 1; use a smaller kappa");
        }
    }
    return corr;
}

std::string bias_to_json(const BiasReport& r) {
    nlohmann::json j;
    j["total"] = r.total;
    j["per_node"] = r.per_node;
    j["epsilon"] = r.epsilon;
    j["sigma2"] = r.sigma2;
    j["kappa"] = r.kappa.has_value() ? nlohmann::json(*r.kappa) : nlohmann::json(nullptr);
    return j.dump(2);
}

} // namespace gnfbc
