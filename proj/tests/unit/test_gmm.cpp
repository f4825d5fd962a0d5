#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "deepclust/errors.hpp"
#include "deepclust/gmm.hpp"
#include "oracles.hpp"

using namespace deepclust;

namespace {

GaussianMixture diag_mixture(std::vector<double> w, std::vector<std::vector<double>> means,
                             std::vector<std::vector<double>> vars) {
    GaussianMixture g;
    for (std::size_t k = 0; k < w.size(); ++k) {
        GaussianComponent c;
        c.weight = w[k];
        c.mean = means[k];
        c.covariance = Matrix(means[k].size(), means[k].size());
        for (std::size_t s = 0; s < vars[k].size(); ++s) c.covariance(s, s) = vars[k][s];
        g.components.push_back(c);
    }
    return g;
}

// Two diagonal Gaussians, one point per column.
Matrix two_blobs(std::size_t n0, std::size_t n1, const std::vector<double>& m0, const std::vector<double>& m1,
                 double sigma, Rng& rng) {
    Matrix x(m0.size(), n0 + n1);
    for (std::size_t j = 0; j < n0 + n1; ++j) {
        const auto& m = j < n0 ? m0 : m1;
        for (std::size_t s = 0; s < m.size(); ++s) x(s, j) = rng.normal(m[s], sigma);
    }
    return x;
}

}  // namespace

TEST_SUITE("gmm") {

TEST_CASE("standard normal log density at the mode") {
    const std::vector<double> x{0.0}, mu{0.0};
    CHECK(gaussian_log_pdf(x, mu, Matrix(1, 1, 1.0), CovarianceType::diagonal) ==
          doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-12));
    CHECK(gaussian_log_pdf(x, mu, Matrix(1, 1, 1.0), CovarianceType::diagonal) ==
          doctest::Approx(-0.918939).epsilon(1e-6));
}

TEST_CASE("log density at the mean depends only on the variances") {
    const std::vector<double> mu{1.0, -2.0, 0.5}, var{0.5, 2.0, 3.0};
    Matrix cov(3, 3);
    double log_det = 0;
    for (int s = 0; s < 3; ++s) {
        cov(s, s) = var[s];
        log_det += std::log(var[s]);
    }
    const double expect = -0.5 * (3 * std::log(2 * std::numbers::pi) + log_det);
    CHECK(gaussian_log_pdf(mu, mu, cov, CovarianceType::diagonal) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(gaussian_log_pdf(mu, mu, cov, CovarianceType::full) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("log density matches direct evaluation") {
    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x(4), mu(4), var(4);
        Matrix cov(4, 4);
        for (int s = 0; s < 4; ++s) {
            x[s] = rng.normal();
            mu[s] = rng.normal();
            var[s] = rng.uniform(0.2, 3.0);
            cov(s, s) = var[s];
        }
        const double ref = oracle::log_normal_pdf_direct(x, mu, var);
        CHECK(gaussian_log_pdf(x, mu, cov, CovarianceType::diagonal) == doctest::Approx(ref).epsilon(1e-10));
        CHECK(gaussian_log_pdf(x, mu, cov, CovarianceType::full) == doctest::Approx(ref).epsilon(1e-10));
    }
}

TEST_CASE("full covariance density matches a 2-D closed form") {
    Matrix cov(2, 2);
    cov(0, 0) = 2.0;
    cov(1, 1) = 1.0;
    cov(0, 1) = cov(1, 0) = 0.6;
    const std::vector<double> x{0.7, -0.4}, mu{0.1, 0.2};
    const double det = 2.0 * 1.0 - 0.36;
    const double dx = 0.6, dy = -0.6;
    const double quad = (1.0 * dx * dx - 2 * 0.6 * dx * dy + 2.0 * dy * dy) / det;
    const double ref = -0.5 * (2 * std::log(2 * std::numbers::pi) + std::log(det) + quad);
    CHECK(gaussian_log_pdf(x, mu, cov, CovarianceType::full) == doctest::Approx(ref).epsilon(1e-12));
    Matrix singular(2, 2, 1.0);
    CHECK_THROWS_AS(gaussian_log_pdf(x, mu, singular, CovarianceType::full), SingularCovariance);
}

TEST_CASE("mixture NLL: single sample at a mode, additivity and log-sum-exp oracle") {
    const auto g = diag_mixture({1.0, 0.0}, {{0.0, 0.0}, {5.0, 5.0}}, {{1.0, 1.0}, {1.0, 1.0}});
    const Matrix one = Matrix::column(std::vector<double>{0.0, 0.0});
    const std::vector<double> origin{0.0, 0.0};
    CHECK(mixture_nll(g, one) ==
          doctest::Approx(-gaussian_log_pdf(origin, origin, g.components[0].covariance, CovarianceType::diagonal)));

    Rng rng(37);
    const auto h = diag_mixture({0.3, 0.7}, {{0.5, -1.0}, {-2.0, 1.5}}, {{0.8, 1.3}, {2.0, 0.4}});
    const Matrix x = oracle::random_matrix(2, 30, rng, 2.0);
    Matrix doubled(2, 60);
    for (std::size_t j = 0; j < 30; ++j) {
        doubled.set_col(2 * j, x.col(j));
        doubled.set_col(2 * j + 1, x.col(j));
    }
    const double nll = mixture_nll(h, x);
    CHECK(mixture_nll(h, doubled) == doctest::Approx(2 * nll).epsilon(1e-12));

    double naive = 0;
    for (std::size_t j = 0; j < 30; ++j) {
        const std::vector<double> xj = x.col(j);
        double p = 0;
        for (const auto& c : h.components) {
            const std::vector<double> var{c.covariance(0, 0), c.covariance(1, 1)};
            p += c.weight * std::exp(oracle::log_normal_pdf_direct(xj, c.mean, var));
        }
        naive -= std::log(p);
    }
    CHECK(nll == doctest::Approx(naive).epsilon(1e-10));
    CHECK_THROWS_AS(mixture_nll(h, Matrix(2, 0)), EmptyBatch);
}

TEST_CASE("responsibilities: symmetry, separation and normalisation") {
    const auto g = diag_mixture({0.5, 0.5}, {{-1.0, 0.0}, {1.0, 0.0}}, {{1.0, 1.0}, {1.0, 1.0}});
    const auto mid = responsibilities(g, Matrix::column(std::vector<double>{0.0, 3.0}));
    CHECK(mid.responsibilities(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mid.responsibilities(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mid.assignments[0] == 0);

    const auto far = diag_mixture({0.5, 0.5}, {{0.0, 0.0}, {10.0, 0.0}}, {{1.0, 1.0}, {1.0, 1.0}});
    const auto at_first = responsibilities(far, Matrix::column(std::vector<double>{0.0, 0.0}));
    CHECK(at_first.responsibilities(0, 0) > 0.999);

    Rng rng(41);
    const auto r = responsibilities(g, oracle::random_matrix(2, 200, rng, 30.0));
    for (std::size_t j = 0; j < 200; ++j) {
        CHECK(r.responsibilities(j, 0) + r.responsibilities(j, 1) == doctest::Approx(1.0).epsilon(1e-12));
        const int argmax = r.responsibilities(j, 1) > r.responsibilities(j, 0) ? 1 : 0;
        CHECK(r.assignments[j] == argmax);
    }
    CHECK_THROWS_AS(responsibilities(g, Matrix(2, 0)), EmptyBatch);
}

TEST_CASE("k-means on square corners and brute-force partitions") {
    Matrix square(2, 4);
    square.set_col(0, std::vector<double>{0, 0});
    square.set_col(1, std::vector<double>{2, 0});
    square.set_col(2, std::vector<double>{0, 1});
    square.set_col(3, std::vector<double>{2, 1});
    const auto fit = kmeans(square, 2, {10, 3000, 5});
    CHECK(fit.wcss == doctest::Approx(oracle::brute_force_wcss(square)));
    CHECK(fit.wcss == doctest::Approx(1.0));  // centers at the midpoints of the two short edges
    std::vector<double> xs{fit.centers(0, 0), fit.centers(0, 1)};
    std::sort(xs.begin(), xs.end());
    CHECK(xs[0] == doctest::Approx(0.0));
    CHECK(xs[1] == doctest::Approx(2.0));
    CHECK(fit.centers(1, 0) == doctest::Approx(0.5));

    // Lloyd with restarts may stall in a local optimum, never below the global one.
    Rng rng(43);
    int optimal = 0;
    const int trials = 25;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t n = 4 + rng.index(9);
        const Matrix pts = oracle::random_matrix(2, n, rng);
        const auto km = kmeans(pts, 2, {10, 3000, static_cast<std::uint64_t>(trial)});
        const double best = oracle::brute_force_wcss(pts);
        CHECK(km.wcss >= best - 1e-9);
        if (km.wcss <= best + 1e-9) ++optimal;
        for (std::size_t i = 1; i < km.wcss_history.size(); ++i) {
            CHECK(km.wcss_history[i] <= km.wcss_history[i - 1] + 1e-12);
        }
    }
    CHECK(optimal >= trials - 3);
}

TEST_CASE("k-means degenerate inputs") {
    const Matrix same(2, 5, 3.0);
    const auto fit = kmeans(same, 2, {});
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(fit.centers(0, k) == 3.0);
        CHECK(fit.centers(1, k) == 3.0);
    }
    Rng rng(47);
    const Matrix pts = oracle::random_matrix(3, 20, rng);
    const auto one = kmeans(pts, 1, {});
    const Matrix mean = column_mean(pts);
    for (std::size_t s = 0; s < 3; ++s) CHECK(one.centers(s, 0) == doctest::Approx(mean[s]).epsilon(1e-12));
    CHECK_THROWS_AS(kmeans(pts, 21, {}), TooFewSamples);
}

TEST_CASE("EM recovers identical-point clusters") {
    Matrix x(2, 20);
    for (std::size_t j = 10; j < 20; ++j) x.set_col(j, std::vector<double>{10, 10});
    const auto fit = fit_em(x, {});
    const auto& c = fit.model.components;
    const int hi = c[0].mean[0] > c[1].mean[0] ? 0 : 1;
    CHECK(c[hi].mean[0] == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(c[hi].mean[1] == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(std::abs(c[1 - hi].mean[0]) < 1e-9);
    CHECK(c[0].weight == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(c[1].weight == doctest::Approx(0.5).epsilon(1e-9));
    for (const auto& comp : c) CHECK(comp.covariance(0, 0) >= 1e-6);
}

TEST_CASE("EM NLL is non-increasing and model invariants hold") {
    Rng rng(53);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix x = two_blobs(60, 25, {0, 0, 0}, {2.5, 1, -1}, 1.0, rng);
        for (auto type : {CovarianceType::diagonal, CovarianceType::full}) {
            EmConfig cfg;
            cfg.covariance = type;
            cfg.kmeans.seed = static_cast<std::uint64_t>(trial);
            const auto fit = fit_em(x, cfg);
            for (std::size_t i = 1; i < fit.nll_history.size(); ++i) {
                CHECK(fit.nll_history[i] <= fit.nll_history[i - 1] + 1e-9);
            }
            double w = 0;
            for (const auto& c : fit.model.components) {
                w += c.weight;
                for (std::size_t s = 0; s < 3; ++s) CHECK(c.covariance(s, s) >= 1e-6);
                for (std::size_t a = 0; a < 3; ++a) {
                    for (std::size_t b = 0; b < 3; ++b) {
                        if (type == CovarianceType::diagonal && a != b) CHECK(c.covariance(a, b) == 0.0);
                        CHECK(c.covariance(a, b) == c.covariance(b, a));
                    }
                }
            }
            CHECK(w == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("EM recovers well-separated Gaussians") {
    std::vector<double> mean_err, weight_err;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(59 + seed);
        const Matrix x = two_blobs(1400, 600, {0, 0}, {6, 0}, 1.0, rng);
        EmConfig cfg;
        cfg.kmeans.seed = seed;
        const auto fit = fit_em(x, cfg);
        const auto& c = fit.model.components;
        const int right = c[0].mean[0] > c[1].mean[0] ? 0 : 1;
        mean_err.push_back(std::max({std::abs(c[right].mean[0] - 6), std::abs(c[right].mean[1]),
                                     std::abs(c[1 - right].mean[0]), std::abs(c[1 - right].mean[1])}));
        weight_err.push_back(std::abs(c[right].weight - 0.3));
    }
    std::ranges::sort(mean_err);
    std::ranges::sort(weight_err);
    CHECK(mean_err[2] < 0.1);
    CHECK(weight_err[2] < 0.05);
}

TEST_CASE("EM is deterministic given batch and seed") {
    Rng rng(61);
    const Matrix x = two_blobs(40, 20, {0, 0}, {3, 3}, 1.0, rng);
    EmConfig cfg;
    cfg.kmeans.seed = 9;
    const auto a = fit_em(x, cfg), b = fit_em(x, cfg);
    CHECK(a.nll_history == b.nll_history);
    CHECK(a.model.components[0].mean == b.model.components[0].mean);
    CHECK(a.model.components[1].covariance == b.model.components[1].covariance);
}

TEST_CASE("EM errors") {
    CHECK_THROWS_AS(fit_em(Matrix(2, 3, 1.0), {}), TooFewSamples);
    CHECK_THROWS_AS(fit_em(Matrix(2, 30, 1.0), {}), DegenerateComponent);
}

TEST_CASE("minority component selection") {
    PseudoLabels labels;
    labels.assignments = {0, 0, 1};
    CHECK(identify_minority(diag_mixture({0.9, 0.1}, {{0.0}, {1.0}}, {{1.0}, {1.0}}), labels) == 1);
    CHECK(identify_minority(diag_mixture({0.1, 0.9}, {{0.0}, {1.0}}, {{1.0}, {1.0}}), labels) == 0);
    PseudoLabels counts;
    counts.assignments.assign(30, 0);
    counts.assignments.insert(counts.assignments.end(), 15, 1);
    const auto tied = diag_mixture({0.5, 0.5}, {{0.0}, {1.0}}, {{1.0}, {1.0}});
    CHECK(identify_minority(tied, counts) == 1);
    PseudoLabels even;
    even.assignments = {0, 1, 0, 1};
    CHECK(identify_minority(tied, even) == 0);
}

}  // TEST_SUITE
