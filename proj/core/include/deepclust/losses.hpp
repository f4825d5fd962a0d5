#pragma once

#include <span>
#include <string>
#include <vector>

#include "deepclust/numcore/matrix.hpp"
#include "deepclust/numcore/tape.hpp"
#include "deepclust/types.hpp"

namespace deepclust {

// Margin of a triplet hinge: a fixed alpha, or the COM adaptive margin
// 1 - d(P, N) (1 - d(mu_min, mu_maj) for the unsupervised variant).
struct MarginSpec {
    enum class Mode { constant, adaptive };

    Mode mode = Mode::adaptive;
    double alpha = 0.0;

    static MarginSpec adaptive() { return {}; }
    // Throws InvalidConfig unless alpha is in [0, 2].
    static MarginSpec constant(double alpha);

    bool is_adaptive() const noexcept { return mode == Mode::adaptive; }
    std::string describe() const;
};

struct ClassWeights {
    double w_min = 1.0;
    double w_maj = 1.0;

    // Throws InvalidConfig unless both are finite and positive.
    void validate() const;
};

// Which hinge argument a training loop builds.
enum class LossKind { com_triplet, triplet };

// ---- single-vector evaluation ---------------------------------------------

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double alpha);
double com_dist_wa(std::span<const double> anchor, std::span<const double> positive,
                   std::span<const double> negative);
double com_adaptive_margin(std::span<const double> positive, std::span<const double> negative);
double udc_adaptive_margin(std::span<const double> mu_min, std::span<const double> mu_maj);
double udc_dist_wa(std::span<const double> anchor, std::span<const double> mu_min,
                   std::span<const double> mu_maj, Label pseudo_class);

// Batch COM-Triplet loss over S x M matrices (one triplet per column).
double com_triplet_loss(const Matrix& anchors, const Matrix& positives, const Matrix& negatives,
                        const MarginSpec& margin);

// Mean weighted binary cross-entropy. Probabilities are clamped to [1e-12, 1 - 1e-12].
// Throws LengthMismatch / EmptyBatch.
double weighted_cross_entropy(std::span<const int> labels, std::span<const double> probs,
                              const ClassWeights& weights);

// ---- differentiable versions (embeddings are S x M tape nodes) ------------

// (1/M) sum max{0, d(A,P) - d(A,N) + alpha}
Var triplet_loss(Var anchors, Var positives, Var negatives, double alpha);
Var com_dist_wa(Var anchors, Var positives, Var negatives);        // 1 x M
Var com_adaptive_margin(Var positives, Var negatives);             // 1 x M
// (1/M) sum max{0, Dist_wa + margin}. Throws EmptyBatch when M = 0.
Var com_triplet_loss(Var anchors, Var positives, Var negatives, const MarginSpec& margin);

// Cluster means are S x 1 nodes; pseudo_classes has one entry per anchor column.
Var udc_adaptive_margin(Var mu_min, Var mu_maj);  // 1 x 1
Var udc_dist_wa(Var anchors, Var mu_min, Var mu_maj, std::span<const Label> pseudo_classes);
Var udc_com_loss(Var anchors, Var mu_min, Var mu_maj, std::span<const Label> pseudo_classes,
                 const MarginSpec& margin);
// Traditional triplet with P and N replaced by the own / other cluster mean.
Var udc_triplet_loss(Var anchors, Var mu_min, Var mu_maj, std::span<const Label> pseudo_classes,
                     double alpha);

// probs: 1 x Z node of minority-class probabilities.
Var weighted_cross_entropy(std::span<const int> labels, Var probs, const ClassWeights& weights);

// Same loss from logits z with p = sigmoid(z); z is clamped so that p stays in [1e-12, 1 - 1e-12].
// Accurate where p saturates, unlike going through probabilities.
Var weighted_cross_entropy_logits(std::span<const int> labels, Var logits, const ClassWeights& weights);

}  // namespace deepclust
