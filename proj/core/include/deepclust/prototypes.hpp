#pragma once

#include <span>
#include <vector>

#include "deepclust/numcore/matrix.hpp"
#include "deepclust/types.hpp"

namespace deepclust {

// The two class prototypes tracked during training, with their cosine
// separation and the inference-time feature mask.
struct Prototypes {
    std::vector<double> cl_min;
    std::vector<double> cl_maj;
    double separation = 0.0;
    std::vector<bool> feature_mask;

    // Builds a pair with separation computed and an all-true mask.
    static Prototypes from_pair(std::vector<double> cl_min, std::vector<double> cl_maj);

    std::size_t dim() const noexcept { return cl_min.size(); }
};

struct CenterPair {
    std::vector<double> cl_min;
    std::vector<double> cl_maj;
};

// Per-class arithmetic mean of the embedding columns. Throws MissingClass when
// a class has no column, LengthMismatch when the tags do not match the batch.
CenterPair batch_centers(const Matrix& embeddings, std::span<const Label> classes);

// Keeps whichever pair (as a pair) has strictly larger separation; ties keep `current`.
// An empty `current` (dim 0) always adopts the candidate.
Prototypes update_prototypes(const Prototypes& current, const CenterPair& candidate);

// Drops coordinates whose prototype difference falls below the mean
// within-prototype range; an empty selection falls back to all-true.
std::vector<bool> feature_mask(std::span<const double> cl_min, std::span<const double> cl_maj);

struct Inference {
    Label label = Label::minority;
    double d_min = 0.0;
    double d_maj = 0.0;
};

// Nearest prototype on the masked coordinates; d_maj == d_min goes to the minority class.
// Throws ZeroVector when the masked test vector (or a masked prototype) has zero norm.
Inference infer_label(std::span<const double> embedding, const Prototypes& proto);

// d_maj / (d_maj + d_min) in [0, 1]; > 0.5 exactly when infer_label says minority,
// with the tie at 0.5 also minority. Throws DegenerateDistances when d_maj + d_min < 1e-12.
double malignancy_score(std::span<const double> embedding, const Prototypes& proto);

}  // namespace deepclust
