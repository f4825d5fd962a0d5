#pragma once

#include <span>

#include "deepclust/numcore/tape.hpp"

namespace deepclust {

// Norms below this are treated as a collapsed (zero) embedding.
inline constexpr double kNormFloor = 1e-12;

// 1 - u.v / (|u||v|), in [0, 2]. Throws ZeroVector / LengthMismatch.
double cosine_distance(std::span<const double> u, std::span<const double> v);

// Column-wise cosine distance between two equally shaped S x n nodes: 1 x n.
// Throws ZeroVector if any column of either operand has norm below kNormFloor.
Var cosine_distance(Var u, Var v);

}  // namespace deepclust
