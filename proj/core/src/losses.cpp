#include "deepclust/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "deepclust/errors.hpp"
#include "deepclust/numcore/cosine.hpp"

namespace deepclust {

namespace {

constexpr double kProbFloor = 1e-12;

void require_labels(std::span<const int> labels) {
    for (int y : labels) {
        if (y != 0 && y != 1) throw InvalidConfig("labels must be 0 or 1");
    }
}

Matrix class_mask(std::span<const Label> classes, Label which) {
    Matrix m(1, classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i) m[i] = classes[i] == which ? 1.0 : 0.0;
    return m;
}

struct UdcDistances {
    Var own;
    Var other;
    Var separation;  // 1 x n, d(mu_min, mu_maj) repeated
};

UdcDistances udc_distances(Var anchors, Var mu_min, Var mu_maj, std::span<const Label> classes) {
    const std::size_t n = anchors.cols();
    if (n == 0) throw EmptyBatch("udc loss on an empty batch");
    if (classes.size() != n) throw LengthMismatch("one pseudo-class per anchor required");
    if (mu_min.cols() != 1 || mu_maj.cols() != 1 || mu_min.rows() != anchors.rows() ||
        mu_maj.rows() != anchors.rows()) {
        throw ShapeMismatch("cluster means must be S x 1 matching the anchors");
    }
    Var to_min = cosine_distance(anchors, repeat_cols(mu_min, n));
    Var to_maj = cosine_distance(anchors, repeat_cols(mu_maj, n));
    const Matrix is_min = class_mask(classes, Label::minority);
    const Matrix is_maj = class_mask(classes, Label::majority);
    Var own = hadamard_const(to_min, is_min) + hadamard_const(to_maj, is_maj);
    Var other = hadamard_const(to_maj, is_min) + hadamard_const(to_min, is_maj);
    Var sep = repeat_cols(cosine_distance(mu_min, mu_maj), n);
    return {own, other, sep};
}

}  // namespace

MarginSpec MarginSpec::constant(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 2.0)) {
        throw InvalidConfig("constant margin must lie in [0, 2]");
    }
    return {Mode::constant, alpha};
}

std::string MarginSpec::describe() const {
    if (is_adaptive()) return "adaptive";
    std::ostringstream os;
    os << "constant(" << alpha << ")";
    return os.str();
}

void ClassWeights::validate() const {
    if (!(std::isfinite(w_min) && std::isfinite(w_maj) && w_min > 0.0 && w_maj > 0.0)) {
        throw InvalidConfig("class weights must be finite and positive");
    }
}

// ---- single-vector evaluation ---------------------------------------------

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double alpha) {
    const double v = cosine_distance(anchor, positive) - cosine_distance(anchor, negative) + alpha;
    return std::max(0.0, v);
}

double com_dist_wa(std::span<const double> anchor, std::span<const double> positive,
                   std::span<const double> negative) {
    return cosine_distance(anchor, positive) -
           0.5 * (cosine_distance(anchor, negative) + cosine_distance(positive, negative));
}

double com_adaptive_margin(std::span<const double> positive, std::span<const double> negative) {
    return 1.0 - cosine_distance(positive, negative);
}

double udc_adaptive_margin(std::span<const double> mu_min, std::span<const double> mu_maj) {
    return 1.0 - cosine_distance(mu_min, mu_maj);
}

double udc_dist_wa(std::span<const double> anchor, std::span<const double> mu_min,
                   std::span<const double> mu_maj, Label pseudo_class) {
    const auto own = pseudo_class == Label::minority ? mu_min : mu_maj;
    const auto other = pseudo_class == Label::minority ? mu_maj : mu_min;
    return cosine_distance(anchor, own) -
           0.5 * (cosine_distance(anchor, other) + cosine_distance(mu_min, mu_maj));
}

double com_triplet_loss(const Matrix& anchors, const Matrix& positives, const Matrix& negatives,
                        const MarginSpec& margin) {
    if (!anchors.same_shape(positives) || !anchors.same_shape(negatives)) {
        throw ShapeMismatch("com_triplet_loss: A, P, N shapes differ");
    }
    const std::size_t m = anchors.cols();
    if (m == 0) throw EmptyBatch("com_triplet_loss on an empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto a = anchors.col(i), p = positives.col(i), n = negatives.col(i);
        const double alpha = margin.is_adaptive() ? com_adaptive_margin(p, n) : margin.alpha;
        total += std::max(0.0, com_dist_wa(a, p, n) + alpha);
    }
    return total / static_cast<double>(m);
}

double weighted_cross_entropy(std::span<const int> labels, std::span<const double> probs,
                              const ClassWeights& weights) {
    if (labels.size() != probs.size()) throw LengthMismatch("labels and probabilities differ in length");
    if (labels.empty()) throw EmptyBatch("cross-entropy on an empty batch");
    require_labels(labels);
    weights.validate();
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = std::clamp(probs[i], kProbFloor, 1.0 - kProbFloor);
        total += labels[i] == 1 ? -weights.w_min * std::log(p) : -weights.w_maj * std::log(1.0 - p);
    }
    return total / static_cast<double>(labels.size());
}

// ---- differentiable versions ----------------------------------------------

static std::pair<Matrix, Matrix> class_weight_rows(std::span<const int> labels, const ClassWeights& weights) {
    Matrix pos(1, labels.size()), neg(1, labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        pos[i] = labels[i] == 1 ? weights.w_min : 0.0;
        neg[i] = labels[i] == 1 ? 0.0 : weights.w_maj;
    }
    return {pos, neg};
}

Var triplet_loss(Var anchors, Var positives, Var negatives, double alpha) {
    if (anchors.cols() == 0) throw EmptyBatch("triplet_loss on an empty batch");
    Var gap = cosine_distance(anchors, positives) - cosine_distance(anchors, negatives);
    return mean(hinge(affine(gap, 1.0, alpha)));
}

Var com_dist_wa(Var anchors, Var positives, Var negatives) {
    Var within = cosine_distance(anchors, positives);
    Var across = cosine_distance(anchors, negatives) + cosine_distance(positives, negatives);
    return within - 0.5 * across;
}

Var com_adaptive_margin(Var positives, Var negatives) {
    return 1.0 - cosine_distance(positives, negatives);
}

Var com_triplet_loss(Var anchors, Var positives, Var negatives, const MarginSpec& margin) {
    if (anchors.cols() == 0) throw EmptyBatch("com_triplet_loss on an empty batch");
    Var dist = com_dist_wa(anchors, positives, negatives);
    Var arg = margin.is_adaptive() ? dist + com_adaptive_margin(positives, negatives)
                                   : affine(dist, 1.0, margin.alpha);
    return mean(hinge(arg));
}

Var udc_adaptive_margin(Var mu_min, Var mu_maj) { return 1.0 - cosine_distance(mu_min, mu_maj); }

Var udc_dist_wa(Var anchors, Var mu_min, Var mu_maj, std::span<const Label> pseudo_classes) {
    const UdcDistances d = udc_distances(anchors, mu_min, mu_maj, pseudo_classes);
    return d.own - 0.5 * (d.other + d.separation);
}

Var udc_com_loss(Var anchors, Var mu_min, Var mu_maj, std::span<const Label> pseudo_classes,
                 const MarginSpec& margin) {
    Var dist = udc_dist_wa(anchors, mu_min, mu_maj, pseudo_classes);
    Var arg = margin.is_adaptive()
                  ? dist + repeat_cols(udc_adaptive_margin(mu_min, mu_maj), dist.cols())
                  : affine(dist, 1.0, margin.alpha);
    return mean(hinge(arg));
}

Var udc_triplet_loss(Var anchors, Var mu_min, Var mu_maj, std::span<const Label> pseudo_classes,
                     double alpha) {
    const UdcDistances d = udc_distances(anchors, mu_min, mu_maj, pseudo_classes);
    return mean(hinge(affine(d.own - d.other, 1.0, alpha)));
}

Var weighted_cross_entropy(std::span<const int> labels, Var probs, const ClassWeights& weights) {
    if (probs.rows() != 1 || probs.cols() != labels.size()) {
        throw LengthMismatch("labels and probabilities differ in length");
    }
    if (labels.empty()) throw EmptyBatch("cross-entropy on an empty batch");
    require_labels(labels);
    weights.validate();
    const auto [pos, neg] = class_weight_rows(labels, weights);
    Var p = clamp(probs, kProbFloor, 1.0 - kProbFloor);
    Var ll = hadamard_const(log(p), pos) + hadamard_const(log(1.0 - p), neg);
    return -1.0 * mean(ll);
}

Var weighted_cross_entropy_logits(std::span<const int> labels, Var logits, const ClassWeights& weights) {
    if (logits.rows() != 1 || logits.cols() != labels.size()) {
        throw LengthMismatch("labels and logits differ in length");
    }
    if (labels.empty()) throw EmptyBatch("cross-entropy on an empty batch");
    require_labels(labels);
    weights.validate();
    const auto [pos, neg] = class_weight_rows(labels, weights);
    const double bound = std::log((1.0 - kProbFloor) / kProbFloor);
    Var z = clamp(logits, -bound, bound);
    Var ll = hadamard_const(log_sigmoid(z), pos) + hadamard_const(log_sigmoid(-1.0 * z), neg);
    return -1.0 * mean(ll);
}

}  // namespace deepclust
