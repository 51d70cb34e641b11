#pragma once

#include <memory>
#include <vector>

#include "gnfbc/graph.hpp"
#include "gnfbc/matrix.hpp"
#include "gnfbc/tape.hpp"

namespace gnfbc {

enum class FitTerm { CrossEntropy, Mse };
enum class PenaltyDomain { Probabilities, Logits };
enum class PenaltyNodes { TrainOnly, AllNodes };

struct LossConfig {
    FitTerm fit = FitTerm::CrossEntropy;
    double lambda = 1.0;
    PenaltyDomain domain = PenaltyDomain::Probabilities;
    PenaltyNodes nodes = PenaltyNodes::AllNodes;
};

/// N x C matrix with a 1 at (i, labels[i]).
DenseMatrix one_hot(const Labels& labels, std::size_t num_classes);

/// Supervised fit term on the training mask plus lambda times the
/// beta-weighted neighbor disagreement penalty. With lambda == 0 the result
/// is the bare fit term (no penalty recorded on the tape).
Value negative_feedback_loss(Tape& t, Value probs, Value logits, const Labels& labels,
                             std::shared_ptr<const SparseGraph> g,
                             std::shared_ptr<const std::vector<double>> beta,
                             const LossConfig& cfg, const Mask& train_mask);

} // namespace gnfbc
