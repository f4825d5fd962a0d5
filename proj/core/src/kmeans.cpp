#include <limits>

#include "deepclust/errors.hpp"
#include "deepclust/gmm.hpp"
#include "deepclust/numcore/rng.hpp"

namespace deepclust {

namespace {

double sq_dist_to_center(const Matrix& points, std::size_t j, const Matrix& centers, std::size_t k) {
    double acc = 0.0;
    for (std::size_t s = 0; s < points.rows(); ++s) {
        const double d = points(s, j) - centers(s, k);
        acc += d * d;
    }
    return acc;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.cols();
    Matrix centers(points.rows(), k);
    const std::size_t first = rng.index(n);
    for (std::size_t s = 0; s < points.rows(); ++s) centers(s, 0) = points(s, first);

    std::vector<double> nearest(n);
    for (std::size_t j = 0; j < n; ++j) nearest[j] = sq_dist_to_center(points, j, centers, 0);

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : nearest) total += d;
        std::size_t pick = first;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t j = 0; j < n; ++j) {
                acc += nearest[j];
                if (acc > target && nearest[j] > 0.0) {
                    pick = j;
                    break;
                }
            }
        }
        for (std::size_t s = 0; s < points.rows(); ++s) centers(s, c) = points(s, pick);
        for (std::size_t j = 0; j < n; ++j) {
            nearest[j] = std::min(nearest[j], sq_dist_to_center(points, j, centers, c));
        }
    }
    return centers;
}

// Assigns every point to its nearest center (ties to the lower index); returns WCSS.
double assign(const Matrix& points, const Matrix& centers, std::vector<int>& assignments) {
    double wcss = 0.0;
    for (std::size_t j = 0; j < points.cols(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        int best_k = 0;
        for (std::size_t c = 0; c < centers.cols(); ++c) {
            const double d = sq_dist_to_center(points, j, centers, c);
            if (d < best) {
                best = d;
                best_k = static_cast<int>(c);
            }
        }
        assignments[j] = best_k;
        wcss += best;
    }
    return wcss;
}

// Empty clusters keep their previous center.
void update_centers(const Matrix& points, const std::vector<int>& assignments, Matrix& centers) {
    Matrix sums(centers.rows(), centers.cols());
    std::vector<std::size_t> counts(centers.cols(), 0);
    for (std::size_t j = 0; j < points.cols(); ++j) {
        const auto c = static_cast<std::size_t>(assignments[j]);
        ++counts[c];
        for (std::size_t s = 0; s < points.rows(); ++s) sums(s, c) += points(s, j);
    }
    for (std::size_t c = 0; c < centers.cols(); ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t s = 0; s < centers.rows(); ++s) {
            centers(s, c) = sums(s, c) / static_cast<double>(counts[c]);
        }
    }
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, const KMeansConfig& config) {
    if (k == 0) throw InvalidConfig("k-means needs k >= 1");
    if (points.cols() < k) {
        throw TooFewSamples("k-means needs at least k points (" + std::to_string(points.cols()) +
                            " < " + std::to_string(k) + ")");
    }
    Rng rng(config.seed);
    const std::size_t restarts = std::max<std::size_t>(1, config.n_init);
    KMeansResult best;
    best.wcss = std::numeric_limits<double>::infinity();

    for (std::size_t r = 0; r < restarts; ++r) {
        KMeansResult run;
        run.centers = seed_plus_plus(points, k, rng);
        run.assignments.assign(points.cols(), -1);
        std::vector<int> next(points.cols());
        for (std::size_t it = 0; it < config.max_iter; ++it) {
            run.wcss = assign(points, run.centers, next);
            run.wcss_history.push_back(run.wcss);
            run.iterations = it + 1;
            if (next == run.assignments) break;
            run.assignments = next;
            update_centers(points, run.assignments, run.centers);
        }
        if (run.wcss < best.wcss) best = std::move(run);
    }
    return best;
}

}  // namespace deepclust
