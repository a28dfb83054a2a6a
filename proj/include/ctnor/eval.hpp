#pragma once

#include <algorithm>
#include <vector>

#include "ctnor/errors.hpp"

namespace ctnor {

struct RocPoint {
    double fpr;
    double tpr;
    double threshold;  // score threshold producing this point
};

// ROC by sweeping a threshold over scores (larger score = detect). Labels
// mark the true positives.
inline std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                        const std::vector<bool>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw InvalidArgument("roc_points: mismatched or empty inputs");
    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    double pos = 0.0, neg = 0.0;
    for (bool l : labels) (l ? pos : neg) += 1.0;
    std::vector<RocPoint> pts;
    pts.push_back({0.0, 0.0, scores[order.front()]});
    double tp = 0.0, fp = 0.0;
    for (size_t i = 0; i < order.size(); ++i) {
        (labels[order[i]] ? tp : fp) += 1.0;
        // emit once per distinct score so ties move diagonally
        if (i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]])
            pts.push_back({neg > 0.0 ? fp / neg : 0.0, pos > 0.0 ? tp / pos : 0.0,
                           scores[order[i]]});
    }
    return pts;
}

// Rank-based AUC (Mann-Whitney), ties counted half.
inline double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw InvalidArgument("roc_auc: mismatched or empty inputs");
    double pos = 0.0, neg = 0.0, wins = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        pos += 1.0;
        for (size_t k = 0; k < scores.size(); ++k) {
            if (labels[k]) continue;
            if (scores[i] > scores[k])
                wins += 1.0;
            else if (scores[i] == scores[k])
                wins += 0.5;
        }
    }
    for (bool l : labels)
        if (!l) neg += 1.0;
    if (pos == 0.0 || neg == 0.0) throw InvalidArgument("roc_auc: need both classes");
    return wins / (pos * neg);
}

}  // namespace ctnor
