#include "deepclust/prototypes.hpp"

#include <algorithm>
#include <cmath>

#include "deepclust/errors.hpp"
#include "deepclust/numcore/cosine.hpp"

namespace deepclust {

namespace {

std::vector<double> masked(std::span<const double> v, const std::vector<bool>& mask) {
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask[i]) out.push_back(v[i]);
    }
    return out;
}

double range_of(std::span<const double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

}  // namespace

Prototypes Prototypes::from_pair(std::vector<double> cl_min, std::vector<double> cl_maj) {
    Prototypes p;
    p.separation = cosine_distance(cl_min, cl_maj);
    p.feature_mask.assign(cl_min.size(), true);
    p.cl_min = std::move(cl_min);
    p.cl_maj = std::move(cl_maj);
    return p;
}

CenterPair batch_centers(const Matrix& embeddings, std::span<const Label> classes) {
    if (classes.size() != embeddings.cols()) {
        throw LengthMismatch("one class tag per embedding column required");
    }
    const std::size_t s = embeddings.rows();
    CenterPair out{std::vector<double>(s, 0.0), std::vector<double>(s, 0.0)};
    std::size_t n_min = 0, n_maj = 0;
    for (std::size_t j = 0; j < classes.size(); ++j) {
        auto& target = classes[j] == Label::minority ? out.cl_min : out.cl_maj;
        (classes[j] == Label::minority ? n_min : n_maj) += 1;
        for (std::size_t r = 0; r < s; ++r) target[r] += embeddings(r, j);
    }
    if (n_min == 0 || n_maj == 0) {
        throw MissingClass(std::string("batch has no ") + (n_min == 0 ? "minority" : "majority") +
                           " embeddings");
    }
    for (double& v : out.cl_min) v /= static_cast<double>(n_min);
    for (double& v : out.cl_maj) v /= static_cast<double>(n_maj);
    return out;
}

Prototypes update_prototypes(const Prototypes& current, const CenterPair& candidate) {
    const double sep = cosine_distance(candidate.cl_min, candidate.cl_maj);
    if (current.dim() != 0 && !(sep > current.separation)) return current;
    Prototypes next;
    next.cl_min = candidate.cl_min;
    next.cl_maj = candidate.cl_maj;
    next.separation = sep;
    next.feature_mask.assign(next.cl_min.size(), true);
    return next;
}

std::vector<bool> feature_mask(std::span<const double> cl_min, std::span<const double> cl_maj) {
    if (cl_min.size() != cl_maj.size()) throw LengthMismatch("prototype dimensions differ");
    if (cl_min.empty()) throw ZeroVector("empty prototypes");
    const double threshold = 0.5 * (range_of(cl_min) + range_of(cl_maj));
    std::vector<bool> mask(cl_min.size());
    bool any = false;
    for (std::size_t s = 0; s < cl_min.size(); ++s) {
        mask[s] = std::abs(cl_min[s] - cl_maj[s]) >= threshold;
        any = any || mask[s];
    }
    if (!any) mask.assign(cl_min.size(), true);
    return mask;
}

Inference infer_label(std::span<const double> embedding, const Prototypes& proto) {
    if (embedding.size() != proto.dim()) throw DimensionMismatch("embedding and prototype dimensions differ");
    const auto& mask = proto.feature_mask;
    const std::vector<double> e = masked(embedding, mask);
    if (norm(e) < kNormFloor) throw ZeroVector("masked test embedding has zero norm");
    Inference out;
    out.d_min = cosine_distance(e, masked(proto.cl_min, mask));
    out.d_maj = cosine_distance(e, masked(proto.cl_maj, mask));
    out.label = out.d_maj < out.d_min ? Label::majority : Label::minority;
    return out;
}

double malignancy_score(std::span<const double> embedding, const Prototypes& proto) {
    const Inference inf = infer_label(embedding, proto);
    const double total = inf.d_maj + inf.d_min;
    if (total < 1e-12) throw DegenerateDistances("test embedding coincides with both prototypes");
    double score = inf.d_maj / total;
    // Keep the score on the same side of 0.5 as the label despite rounding in the sum.
    if (inf.label == Label::majority && score >= 0.5) score = std::nextafter(0.5, 0.0);
    if (inf.label == Label::minority && score < 0.5) score = 0.5;
    return score;
}

}  // namespace deepclust
