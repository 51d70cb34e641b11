#include "gnfbc/metrics.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "gnfbc/errors.hpp"

namespace gnfbc {

namespace {

std::size_t argmax_row(const DenseMatrix& m, std::size_t i) {
    const double* r = m.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.cols(); ++j) {
        if (r[j] > r[best]) best = j;
    }
    return best;
}

} // namespace

double accuracy(const DenseMatrix& probs, const Labels& labels, const Mask& mask) {
    if (mask.empty()) throw ValidationError("accuracy: empty mask");
    std::size_t hits = 0;
    for (std::uint32_t i : mask) {
        if (static_cast<int>(argmax_row(probs, i)) == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(mask.size());
}

double auc_roc(const std::vector<double>& scores, const Labels& labels, const Mask& mask) {
    if (mask.empty()) throw ValidationError("auc_roc: empty mask");
    std::vector<std::pair<double, int>> pts;
    pts.reserve(mask.size());
    std::size_t pos = 0;
    for (std::uint32_t i : mask) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw ValidationError("auc_roc: labels must be binary, node " + std::to_string(i) +
                                  " has " + std::to_string(labels[i]));
        }
        pts.emplace_back(scores[i], labels[i]);
        pos += static_cast<std::size_t>(labels[i]);
    }
    const std::size_t neg = pts.size() - pos;
    if (pos == 0 || neg == 0) {
        throw ValidationError("auc_roc: mask holds a single class, both needed");
    }
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < pts.size()) {
        std::size_t j = i;
        while (j < pts.size() && pts[j].first == pts[i].first) ++j;
        // ranks are 1-based; tied scores share the midrank
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (pts[k].second == 1) rank_sum_pos += midrank;
        }
        i = j;
    }
    const double p = static_cast<double>(pos);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double f1_macro(const DenseMatrix& probs, const Labels& labels, const Mask& mask,
                std::size_t num_classes) {
    if (mask.empty()) throw ValidationError("f1_macro: empty mask");
    std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
    for (std::uint32_t i : mask) {
        const std::size_t pred = argmax_row(probs, i);
        const auto truth = static_cast<std::size_t>(labels[i]);
        if (pred == truth) {
            ++tp[pred];
        } else {
            ++fp[pred];
            ++fn[truth];
        }
    }
    double total = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
        if (denom > 0.0) total += 2.0 * static_cast<double>(tp[c]) / denom;
    }
    return total / static_cast<double>(num_classes);
}

MetricsReport evaluate_split(const DenseMatrix& probs, const Labels& labels,
                             const Mask& mask, std::size_t num_classes,
                             const std::string& split, long epoch) {
    MetricsReport r;
    r.accuracy = accuracy(probs, labels, mask);
    r.f1_macro = f1_macro(probs, labels, mask, num_classes);
    r.split = split;
    r.epoch = epoch;
    if (num_classes == 2) {
        std::vector<double> scores(probs.rows());
        for (std::size_t i = 0; i < probs.rows(); ++i) scores[i] = probs(i, 1);
        bool both = false, seen0 = false, seen1 = false;
        for (std::uint32_t i : mask) {
            (labels[i] == 1 ? seen1 : seen0) = true;
            both = seen0 && seen1;
            if (both) break;
        }
        if (both) r.auc = auc_roc(scores, labels, mask);
    }
    return r;
}

std::string metrics_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["accuracy"] = r.accuracy;
    j["auc"] = r.auc.has_value() ? nlohmann::json(*r.auc) : nlohmann::json(nullptr);
    j["f1_macro"] = r.f1_macro;
    j["split"] = r.split;
    j["epoch"] = r.epoch;
    return j.dump(2);
}

} // namespace gnfbc
