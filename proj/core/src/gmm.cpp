#include "deepclust/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "deepclust/errors.hpp"
#include "deepclust/numcore/rng.hpp"

namespace deepclust {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2 pi)

// Lower-triangular Cholesky factor, or nullopt when not positive definite.
std::optional<Matrix> cholesky(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return l;
}

// Per-component quantities reused across every sample of one E-step.
struct ComponentCache {
    CovarianceType type;
    std::vector<double> mean;
    std::vector<double> inv_var;  // diagonal
    Matrix chol;                  // full
    double log_norm = 0.0;        // -0.5 (S log 2pi + log|Sigma|)
    double log_weight = 0.0;
};

void mirror_upper(Matrix& m) {
    for (std::size_t a = 0; a < m.rows(); ++a) {
        for (std::size_t b = 0; b < a; ++b) m(a, b) = m(b, a);
    }
}

ComponentCache make_cache(std::span<const double> mean, const Matrix& cov, CovarianceType type) {
    const std::size_t s = mean.size();
    if (cov.rows() != s || cov.cols() != s) throw ShapeMismatch("covariance must be S x S");
    ComponentCache c{type, std::vector<double>(mean.begin(), mean.end()), {}, {}, 0.0, 0.0};
    double log_det = 0.0;
    if (type == CovarianceType::diagonal) {
        c.inv_var.resize(s);
        for (std::size_t i = 0; i < s; ++i) {
            const double v = cov(i, i);
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw SingularCovariance("diagonal covariance entry is not positive");
            }
            c.inv_var[i] = 1.0 / v;
            log_det += std::log(v);
        }
    } else {
        auto l = cholesky(cov);
        if (!l) throw SingularCovariance("covariance is not positive definite");
        c.chol = std::move(*l);
        for (std::size_t i = 0; i < s; ++i) log_det += 2.0 * std::log(c.chol(i, i));
    }
    if (!std::isfinite(log_det)) throw SingularCovariance("covariance determinant under/overflows");
    c.log_norm = -0.5 * (static_cast<double>(s) * kLog2Pi + log_det);
    return c;
}

template <typename Accessor>
double cached_log_pdf(const ComponentCache& c, Accessor x) {
    const std::size_t s = c.mean.size();
    double maha = 0.0;
    if (c.type == CovarianceType::diagonal) {
        for (std::size_t i = 0; i < s; ++i) {
            const double d = x(i) - c.mean[i];
            maha += d * d * c.inv_var[i];
        }
    } else {
        // Forward substitution L z = (x - mu); maha = |z|^2.
        std::vector<double> z(s);
        for (std::size_t i = 0; i < s; ++i) {
            double v = x(i) - c.mean[i];
            for (std::size_t k = 0; k < i; ++k) v -= c.chol(i, k) * z[k];
            z[i] = v / c.chol(i, i);
            maha += z[i] * z[i];
        }
    }
    return c.log_norm - 0.5 * maha;
}

std::vector<ComponentCache> make_caches(const GaussianMixture& model) {
    if (model.components.size() != kMixtureComponents) {
        throw InvalidConfig("mixture must have exactly two components");
    }
    std::vector<ComponentCache> caches;
    for (const auto& comp : model.components) {
        caches.push_back(make_cache(comp.mean, comp.covariance, model.type));
        caches.back().log_weight =
            comp.weight > 0.0 ? std::log(comp.weight) : -std::numeric_limits<double>::infinity();
    }
    return caches;
}

// Per-sample log h_k G_k(x_j) for all k, then log-sum-exp.
struct LogJoint {
    Matrix joint;              // n x K
    std::vector<double> norm;  // log sum_k, per sample
};

LogJoint log_joint(const GaussianMixture& model, const Matrix& batch) {
    if (batch.cols() == 0) throw EmptyBatch("mixture evaluation on an empty batch");
    if (batch.rows() != model.dim()) throw DimensionMismatch("batch dimension differs from the mixture");
    const auto caches = make_caches(model);
    const std::size_t n = batch.cols(), k = caches.size();
    LogJoint out{Matrix(n, k), std::vector<double>(n)};
    for (std::size_t j = 0; j < n; ++j) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            const double v =
                caches[c].log_weight + cached_log_pdf(caches[c], [&](std::size_t i) { return batch(i, j); });
            out.joint(j, c) = v;
            top = std::max(top, v);
        }
        double acc = 0.0;
        for (std::size_t c = 0; c < k; ++c) acc += std::exp(out.joint(j, c) - top);
        out.norm[j] = top + std::log(acc);
    }
    return out;
}

double nll_of(const LogJoint& lj) {
    double total = 0.0;
    for (double v : lj.norm) total -= v;
    return total;
}

GaussianMixture init_from_kmeans(const Matrix& batch, const EmConfig& config, std::uint64_t seed) {
    KMeansConfig kc = config.kmeans;
    kc.seed = seed;
    const KMeansResult km = kmeans(batch, kMixtureComponents, kc);
    const std::size_t s = batch.rows(), n = batch.cols();

    GaussianMixture model;
    model.type = config.covariance;
    for (std::size_t c = 0; c < kMixtureComponents; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < n; ++j) {
            if (km.assignments[j] == static_cast<int>(c)) members.push_back(j);
        }
        if (members.empty()) {
            throw DegenerateComponent("k-means initialisation left component " + std::to_string(c) +
                                      " without members");
        }
        GaussianComponent comp;
        comp.weight = static_cast<double>(members.size()) / static_cast<double>(n);
        comp.mean = km.centers.col(c);
        comp.covariance = Matrix(s, s);
        const double inv = 1.0 / static_cast<double>(members.size());
        for (std::size_t j : members) {
            for (std::size_t a = 0; a < s; ++a) {
                const double da = batch(a, j) - comp.mean[a];
                if (config.covariance == CovarianceType::diagonal) {
                    comp.covariance(a, a) += da * da * inv;
                } else {
                    for (std::size_t b = a; b < s; ++b) {
                        comp.covariance(a, b) += da * (batch(b, j) - comp.mean[b]) * inv;
                    }
                }
            }
        }
        if (config.covariance == CovarianceType::full) mirror_upper(comp.covariance);
        for (std::size_t a = 0; a < s; ++a) {
            if (config.covariance == CovarianceType::diagonal) {
                comp.covariance(a, a) = std::max(comp.covariance(a, a), config.covariance_floor);
            } else {
                comp.covariance(a, a) += config.covariance_floor;
            }
        }
        model.components.push_back(std::move(comp));
    }
    return model;
}

// Closed-form M-step. The weight update is the stationary point of the NLL
// under the simplex constraint, so the multiplier never appears explicitly.
void m_step(const Matrix& batch, const Matrix& resp, const EmConfig& config, GaussianMixture& model) {
    const std::size_t s = batch.rows(), n = batch.cols();
    for (std::size_t c = 0; c < kMixtureComponents; ++c) {
        double nk = 0.0;
        for (std::size_t j = 0; j < n; ++j) nk += resp(j, c);
        if (nk < 1.0 - 1e-9) {
            throw DegenerateComponent("component " + std::to_string(c) + " holds " + std::to_string(nk) +
                                      " effective samples");
        }
        GaussianComponent& comp = model.components[c];
        comp.weight = nk / static_cast<double>(n);
        std::fill(comp.mean.begin(), comp.mean.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t a = 0; a < s; ++a) comp.mean[a] += resp(j, c) * batch(a, j);
        }
        for (double& m : comp.mean) m /= nk;

        comp.covariance = Matrix(s, s);
        for (std::size_t j = 0; j < n; ++j) {
            const double r = resp(j, c) / nk;
            for (std::size_t a = 0; a < s; ++a) {
                const double da = batch(a, j) - comp.mean[a];
                if (config.covariance == CovarianceType::diagonal) {
                    comp.covariance(a, a) += r * da * da;
                } else {
                    for (std::size_t b = a; b < s; ++b) {
                        comp.covariance(a, b) += r * da * (batch(b, j) - comp.mean[b]);
                    }
                }
            }
        }
        if (config.covariance == CovarianceType::full) mirror_upper(comp.covariance);
        for (std::size_t a = 0; a < s; ++a) {
            if (config.covariance == CovarianceType::diagonal) {
                comp.covariance(a, a) = std::max(comp.covariance(a, a), config.covariance_floor);
            } else {
                comp.covariance(a, a) += config.covariance_floor;
            }
        }
    }
    // Re-normalise against rounding so the weights sum to one.
    const double total = model.components[0].weight + model.components[1].weight;
    for (auto& comp : model.components) comp.weight /= total;
}

Matrix resp_from(const LogJoint& lj) {
    Matrix resp = lj.joint;
    for (std::size_t j = 0; j < resp.rows(); ++j) {
        for (std::size_t c = 0; c < resp.cols(); ++c) resp(j, c) = std::exp(resp(j, c) - lj.norm[j]);
    }
    return resp;
}

EmFit fit_once(const Matrix& batch, const EmConfig& config, std::uint64_t seed) {
    EmFit fit;
    fit.model = init_from_kmeans(batch, config, seed);
    LogJoint lj = log_joint(fit.model, batch);
    double prev = nll_of(lj);
    fit.nll_history.push_back(prev);
    for (std::size_t it = 0; it < config.max_iter; ++it) {
        m_step(batch, resp_from(lj), config, fit.model);
        lj = log_joint(fit.model, batch);
        const double cur = nll_of(lj);
        fit.nll_history.push_back(cur);
        fit.iterations = it + 1;
        if (std::abs(prev - cur) < config.tolerance) {
            fit.converged = true;
            break;
        }
        prev = cur;
    }
    return fit;
}

}  // namespace

std::vector<double> GaussianMixture::weights() const {
    std::vector<double> w;
    for (const auto& c : components) w.push_back(c.weight);
    return w;
}

double gaussian_log_pdf(std::span<const double> x, std::span<const double> mean, const Matrix& covariance,
                        CovarianceType type) {
    if (x.size() != mean.size()) throw DimensionMismatch("point and mean dimensions differ");
    const ComponentCache c = make_cache(mean, covariance, type);
    return cached_log_pdf(c, [&](std::size_t i) { return x[i]; });
}

double mixture_nll(const GaussianMixture& model, const Matrix& batch) {
    return nll_of(log_joint(model, batch));
}

PseudoLabels responsibilities(const GaussianMixture& model, const Matrix& batch) {
    const LogJoint lj = log_joint(model, batch);
    PseudoLabels out;
    out.responsibilities = resp_from(lj);
    out.assignments.resize(batch.cols());
    for (std::size_t j = 0; j < batch.cols(); ++j) {
        out.assignments[j] = out.responsibilities(j, 1) > out.responsibilities(j, 0) ? 1 : 0;
    }
    return out;
}

EmFit fit_em(const Matrix& batch, const EmConfig& config) {
    if (batch.cols() < 2 * kMixtureComponents) {
        throw TooFewSamples("EM needs at least " + std::to_string(2 * kMixtureComponents) + " samples, got " +
                            std::to_string(batch.cols()));
    }
    if (!batch.all_finite()) throw InvalidConfig("EM input contains non-finite values");
    std::uint64_t seed = config.kmeans.seed;
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            EmFit fit = fit_once(batch, config, seed);
            fit.restarts = attempt;
            return fit;
        } catch (const DegenerateComponent& e) {
            if (attempt >= config.max_restarts) {
                throw DegenerateComponent(std::string(e.what()) + " (after " + std::to_string(attempt) +
                                          " restarts)");
            }
            seed = mix_seed(config.kmeans.seed, attempt + 1);
        }
    }
}

int identify_minority(const GaussianMixture& model, const PseudoLabels& labels) {
    const double h0 = model.components.at(0).weight;
    const double h1 = model.components.at(1).weight;
    if (h1 < h0) return 1;
    if (h0 < h1) return 0;
    const auto n1 = std::count(labels.assignments.begin(), labels.assignments.end(), 1);
    const auto n0 = static_cast<std::ptrdiff_t>(labels.assignments.size()) - n1;
    return n1 < n0 ? 1 : 0;
}

}  // namespace deepclust
