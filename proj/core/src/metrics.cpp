#include "deepclust/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "deepclust/errors.hpp"
#include "deepclust/log.hpp"

namespace deepclust {

namespace {

void check_binary(std::span<const int> v, const char* what) {
    for (int x : v) {
        if (x != 0 && x != 1) throw InvalidConfig(std::string(what) + " must be 0 or 1");
    }
}

}  // namespace

Confusion confusion(std::span<const int> labels, std::span<const int> predictions) {
    if (labels.size() != predictions.size()) throw LengthMismatch("labels and predictions differ in length");
    check_binary(labels, "labels");
    check_binary(predictions, "predictions");
    Confusion c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1) {
            (predictions[i] == 1 ? c.tp : c.fn) += 1;
        } else {
            (predictions[i] == 1 ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

WeightedMetrics weighted_metrics(std::span<const int> labels, std::span<const int> predictions) {
    if (labels.empty()) throw EmptyInput("metrics need at least one sample");
    const Confusion c = confusion(labels, predictions);
    WeightedMetrics out;
    auto ratio = [&out](double num, double den) {
        if (den == 0.0) {
            ++out.zero_divisions;
            return 0.0;
        }
        return num / den;
    };

    struct PerClass {
        double tp, fp, tn, fn;
    };
    // Class 0 as positive swaps the roles of the cells.
    const PerClass classes[2] = {
        {double(c.tn), double(c.fn), double(c.tp), double(c.fp)},
        {double(c.tp), double(c.fp), double(c.tn), double(c.fn)},
    };
    const double total = static_cast<double>(c.total());
    for (const PerClass& k : classes) {
        const double support = k.tp + k.fn;
        const double w = support / total;
        // (support / N) * (tp / support) == tp / N; written this way it matches accuracy bit for bit.
        if (support == 0.0) ++out.zero_divisions;
        const double recall_share = k.tp / total;
        const double precision = ratio(k.tp, k.tp + k.fp);
        const double specificity = ratio(k.tn, k.tn + k.fp);
        const double f1 = ratio(2.0 * k.tp, 2.0 * k.tp + k.fp + k.fn);
        out.recall += recall_share;
        out.precision += w * precision;
        out.specificity += w * specificity;
        out.f1 += w * f1;
    }
    out.accuracy = static_cast<double>(c.tn) / total + static_cast<double>(c.tp) / total;
    if (out.zero_divisions > 0) {
        logging::debug("weighted_metrics: {} per-class ratios had a zero denominator", out.zero_divisions);
    }
    return out;
}

double roc_auc(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) throw LengthMismatch("labels and scores differ in length");
    check_binary(labels, "labels");
    const std::size_t n = labels.size();
    const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw SingleClass("AUC needs both classes present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Twice the midrank keeps every value an integer.
    double pos_rank_sum_x2 = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double rank_x2 = static_cast<double>(i + 1 + j);  // (i+1) + j = 2 * midrank
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) pos_rank_sum_x2 += rank_x2;
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    const double u = 0.5 * pos_rank_sum_x2 - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

}  // namespace deepclust
