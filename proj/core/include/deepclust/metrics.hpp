#pragma once

#include <cstddef>
#include <span>

namespace deepclust {

// Minority (label 1) is the positive class.
struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

Confusion confusion(std::span<const int> labels, std::span<const int> predictions);

// Support-weighted averages of the per-class metrics. Per-class ratios with a
// zero denominator contribute 0 and are counted in zero_divisions.
struct WeightedMetrics {
    double recall = 0.0;
    double precision = 0.0;
    double specificity = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;
    std::size_t zero_divisions = 0;
};

// Throws EmptyInput / LengthMismatch.
WeightedMetrics weighted_metrics(std::span<const int> labels, std::span<const int> predictions);

// Mann-Whitney AUC with midranks: P(score_min > score_maj) + 0.5 P(tie).
// Throws SingleClass unless both labels occur, LengthMismatch on size mismatch.
double roc_auc(std::span<const int> labels, std::span<const double> scores);

}  // namespace deepclust
