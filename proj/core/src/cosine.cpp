#include "deepclust/numcore/cosine.hpp"

#include <algorithm>
#include <string>

#include "deepclust/errors.hpp"

namespace deepclust {

double cosine_distance(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw LengthMismatch("cosine_distance: vector lengths differ");
    if (u.empty()) throw ZeroVector("cosine_distance: empty vector");
    const double nu = norm(u);
    const double nv = norm(v);
    if (nu < kNormFloor || nv < kNormFloor) {
        throw ZeroVector("cosine_distance: vector norm below 1e-12 (collapsed embedding)");
    }
    // Rounding can push the cosine a hair outside [-1, 1].
    return 1.0 - std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

Var cosine_distance(Var u, Var v) {
    if (!u.value().same_shape(v.value())) throw ShapeMismatch("cosine_distance: shapes differ");
    if (u.rows() == 0) throw ZeroVector("cosine_distance: empty vector");
    Var nu = col_norm(u);
    Var nv = col_norm(v);
    for (std::size_t c = 0; c < nu.cols(); ++c) {
        if (nu.value()[c] < kNormFloor || nv.value()[c] < kNormFloor) {
            throw ZeroVector("cosine_distance: column " + std::to_string(c) +
                             " has norm below 1e-12 (collapsed embedding)");
        }
    }
    return 1.0 - col_dot(u, v) / (nu * nv);
}

}  // namespace deepclust
