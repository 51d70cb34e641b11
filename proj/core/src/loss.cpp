#include "gnfbc/loss.hpp"

#include <cmath>
#include <string>

#include "gnfbc/errors.hpp"

namespace gnfbc {

DenseMatrix one_hot(const Labels& labels, std::size_t num_classes) {
    DenseMatrix out(labels.size(), num_classes, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
            throw ValidationError("one_hot: label " + std::to_string(y) + " out of range [0," +
                                  std::to_string(num_classes) + ") at node " + std::to_string(i));
        }
        out(i, static_cast<std::size_t>(y)) = 1.0;
    }
    return out;
}

Value negative_feedback_loss(Tape& t, Value probs, Value logits, const Labels& labels,
                             std::shared_ptr<const SparseGraph> g,
                             std::shared_ptr<const std::vector<double>> beta,
                             const LossConfig& cfg, const Mask& train_mask) {
    if (!std::isfinite(cfg.lambda) || cfg.lambda < 0.0) {
        throw ValidationError("loss: lambda must be finite and non-negative");
    }
    Value fit{};
    if (cfg.fit == FitTerm::CrossEntropy) {
        fit = t.cross_entropy(probs, labels, train_mask);
    } else {
        auto target = std::make_shared<const DenseMatrix>(one_hot(labels, t.value(probs).cols()));
        fit = t.mse_loss(probs, target, train_mask);
    }
    if (cfg.lambda == 0.0) return fit;

    auto node_set = std::make_shared<Mask>();
    if (cfg.nodes == PenaltyNodes::TrainOnly) {
        *node_set = train_mask;
    } else {
        node_set->resize(g->num_nodes());
        for (std::size_t i = 0; i < g->num_nodes(); ++i) (*node_set)[i] = static_cast<std::uint32_t>(i);
    }
    Value pred = cfg.domain == PenaltyDomain::Probabilities ? probs : logits;
    Value pen = t.neighbor_penalty(pred, g, beta, node_set);
    return t.add(fit, t.scale(pen, cfg.lambda));
}

} // namespace gnfbc
