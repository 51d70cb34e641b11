#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gnfbc/matrix.hpp"

namespace gnfbc {

/// Fraction of masked nodes whose argmax row (ties to the lowest class
/// index) matches the label.
double accuracy(const DenseMatrix& probs, const Labels& labels, const Mask& mask);

/// Rank-statistic area under the ROC curve with midranks for tied scores.
/// scores[i] is the positive-class score of node i; labels are 0/1.
double auc_roc(const std::vector<double>& scores, const Labels& labels, const Mask& mask);

/// Unweighted mean over classes of 2tp/(2tp+fp+fn); an entirely absent
/// class contributes 0.
double f1_macro(const DenseMatrix& probs, const Labels& labels, const Mask& mask,
                std::size_t num_classes);

struct MetricsReport {
    double accuracy = 0.0;
    std::optional<double> auc;   // binary tasks only
    double f1_macro = 0.0;
    std::string split;
    long epoch = -1;
};

/// Computes all applicable metrics on one split (auc only when C == 2).
MetricsReport evaluate_split(const DenseMatrix& probs, const Labels& labels,
                             const Mask& mask, std::size_t num_classes,
                             const std::string& split, long epoch);

/// Flat JSON object with keys accuracy, auc, f1_macro, split, epoch.
std::string metrics_to_json(const MetricsReport& r);

} // namespace gnfbc
