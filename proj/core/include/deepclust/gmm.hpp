#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "deepclust/numcore/matrix.hpp"

namespace deepclust {

// ---- k-means ---------------------------------------------------------------

struct KMeansConfig {
    std::size_t n_init = 10;      // independent k-means++ restarts
    std::size_t max_iter = 3000;  // Lloyd iteration cap per restart
    std::uint64_t seed = 0;
};

struct KMeansResult {
    Matrix centers;                    // S x K
    std::vector<int> assignments;      // one per point
    double wcss = 0.0;                 // within-cluster sum of squares
    std::size_t iterations = 0;        // Lloyd iterations of the winning restart
    std::vector<double> wcss_history;  // per Lloyd iteration, winning restart
};

// k-means++ seeding, Lloyd iterations, best-of-n_init by WCSS.
// `points` is S x n with one point per column. Throws TooFewSamples if n < k.
// When every remaining point coincides with a chosen center, the next center
// duplicates the first one.
KMeansResult kmeans(const Matrix& points, std::size_t k, const KMeansConfig& config);

// ---- Gaussian mixture ------------------------------------------------------

inline constexpr std::size_t kMixtureComponents = 2;

enum class CovarianceType { diagonal, full };

struct GaussianComponent {
    double weight = 0.5;
    std::vector<double> mean;
    Matrix covariance;  // S x S; off-diagonals stay zero for CovarianceType::diagonal
};

struct GaussianMixture {
    CovarianceType type = CovarianceType::diagonal;
    std::vector<GaussianComponent> components;  // kMixtureComponents entries

    std::size_t dim() const { return components.empty() ? 0 : components.front().mean.size(); }
    std::vector<double> weights() const;
};

struct PseudoLabels {
    std::vector<int> assignments;  // argmax_k r_jk, ties to the lower index
    Matrix responsibilities;       // n x K
    int minority_component = 0;
};

struct EmConfig {
    std::size_t max_iter = 100;
    double tolerance = 1e-3;      // stop when |NLL change| falls below this
    double covariance_floor = 1e-6;
    CovarianceType covariance = CovarianceType::diagonal;
    std::size_t max_restarts = 3;  // fresh k-means seeds after a degenerate component
    KMeansConfig kmeans{};
};

struct EmFit {
    GaussianMixture model;
    std::vector<double> nll_history;  // initial model followed by one entry per iteration
    std::size_t iterations = 0;
    std::size_t restarts = 0;
    bool converged = false;
};

// log N(x; mean, covariance), evaluated in log space. Throws SingularCovariance
// when the covariance is not positive definite.
double gaussian_log_pdf(std::span<const double> x, std::span<const double> mean,
                        const Matrix& covariance, CovarianceType type);

// -sum_j log sum_k h_k G_k(x_j). batch is S x n. Throws EmptyBatch.
double mixture_nll(const GaussianMixture& model, const Matrix& batch);

// Posterior membership via log-sum-exp. minority_component is left at 0;
// see identify_minority. Throws EmptyBatch.
PseudoLabels responsibilities(const GaussianMixture& model, const Matrix& batch);

// EM with k-means initialisation. Throws TooFewSamples (n < 2K) and
// DegenerateComponent once max_restarts fresh seeds have all failed.
EmFit fit_em(const Matrix& batch, const EmConfig& config);

// Smaller mixture weight; ties broken by fewer assigned members, then index 0.
int identify_minority(const GaussianMixture& model, const PseudoLabels& labels);

}  // namespace deepclust
