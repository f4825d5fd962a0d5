#pragma once

// Reference implementations used as test oracles. Written independently of
// the library: plain loops, no shared helpers beyond Matrix storage and Tape.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "deepclust/numcore/matrix.hpp"
#include "deepclust/numcore/rng.hpp"
#include "deepclust/numcore/tape.hpp"

namespace oracle {

using deepclust::Matrix;
using deepclust::Rng;
using deepclust::Tape;
using deepclust::Var;

inline double cos_dist(std::span<const double> u, std::span<const double> v) {
    double uv = 0, uu = 0, vv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    return 1.0 - uv / (std::sqrt(uu) * std::sqrt(vv));
}

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (double& x : m.data()) x = scale * rng.normal();
    return m;
}

// Pairwise AUC: minority-over-majority concordance with 0.5 tie credit.
inline double pairwise_auc(std::span<const int> labels, std::span<const double> scores) {
    double wins = 0;
    double pairs = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] != 0) continue;
            pairs += 1;
            if (scores[i] > scores[j]) wins += 1;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

struct DirectMetrics {
    double recall = 0, precision = 0, specificity = 0, accuracy = 0, f1 = 0;
};

// Per-class metrics computed from scratch for each class, then support-weighted.
inline DirectMetrics direct_weighted_metrics(std::span<const int> y, std::span<const int> p) {
    const double n = static_cast<double>(y.size());
    DirectMetrics out;
    double correct = 0;
    for (std::size_t i = 0; i < y.size(); ++i) correct += (y[i] == p[i]) ? 1 : 0;
    out.accuracy = correct / n;
    for (int cls : {0, 1}) {
        double tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const bool actual = y[i] == cls, predicted = p[i] == cls;
            if (actual && predicted) tp += 1;
            else if (!actual && predicted) fp += 1;
            else if (!actual && !predicted) tn += 1;
            else fn += 1;
        }
        const double w = (tp + fn) / n;
        auto safe = [](double a, double b) { return b == 0 ? 0.0 : a / b; };
        const double rec = safe(tp, tp + fn), prec = safe(tp, tp + fp);
        out.recall += w * rec;
        out.precision += w * prec;
        out.specificity += w * safe(tn, tn + fp);
        out.f1 += w * safe(2 * prec * rec, prec + rec);
    }
    return out;
}

// Central finite-difference comparison of tape gradients.
//
// `build` records a scalar loss from leaf nodes created on the given tape.
// Each entry is compared with |a - n| / max(|a|, |n|, 1e-8).
struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t entries = 0;
};

using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

inline double eval_loss(const LossBuilder& build, const std::vector<Matrix>& inputs) {
    Tape tape;
    std::vector<Var> leaves;
    for (const Matrix& m : inputs) leaves.push_back(tape.leaf(m));
    return build(tape, leaves).scalar();
}

inline GradCheck check_gradients(const LossBuilder& build, std::vector<Matrix> inputs, double h = 1e-4) {
    Tape tape;
    std::vector<Var> leaves;
    for (const Matrix& m : inputs) leaves.push_back(tape.leaf(m));
    tape.backward(build(tape, leaves));

    GradCheck out;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Matrix analytic = tape.grad(leaves[k]);
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double keep = inputs[k][i];
            inputs[k][i] = keep + h;
            const double up = eval_loss(build, inputs);
            inputs[k][i] = keep - h;
            const double down = eval_loss(build, inputs);
            inputs[k][i] = keep;
            const double numeric = (up - down) / (2 * h);
            const double a = analytic.empty() ? 0.0 : analytic[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / denom);
            ++out.entries;
        }
    }
    return out;
}

inline double log_normal_pdf_direct(std::span<const double> x, std::span<const double> mean,
                                    std::span<const double> var) {
    // Product of 1-D densities, then log.
    double density = 1.0;
    for (std::size_t s = 0; s < x.size(); ++s) {
        const double d = x[s] - mean[s];
        density *= std::exp(-0.5 * d * d / var[s]) / std::sqrt(2 * std::numbers::pi * var[s]);
    }
    return std::log(density);
}

// Best 2-partition WCSS by exhaustive enumeration (n <= ~16 points).
inline double brute_force_wcss(const Matrix& points) {
    const std::size_t n = points.cols(), d = points.rows();
    double best = INFINITY;
    for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
        double total = 0;
        for (int side : {0, 1}) {
            std::vector<double> c(d, 0.0);
            double count = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (((mask >> j) & 1U) != static_cast<unsigned>(side)) continue;
                for (std::size_t r = 0; r < d; ++r) c[r] += points(r, j);
                count += 1;
            }
            for (double& v : c) v /= count;
            for (std::size_t j = 0; j < n; ++j) {
                if (((mask >> j) & 1U) != static_cast<unsigned>(side)) continue;
                for (std::size_t r = 0; r < d; ++r) total += (points(r, j) - c[r]) * (points(r, j) - c[r]);
            }
        }
        best = std::min(best, total);
    }
    return best;
}

}  // namespace oracle
