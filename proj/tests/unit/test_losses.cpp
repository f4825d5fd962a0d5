#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "deepclust/errors.hpp"
#include "deepclust/losses.hpp"
#include "deepclust/numcore/cosine.hpp"
#include "oracles.hpp"

using namespace deepclust;

namespace {

using Vec = std::vector<double>;

const Vec e1{1, 0}, e2{0, 1}, ne1{-1, 0};

Vec random_vec(Rng& rng, std::size_t n) {
    Vec v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

Matrix columns(std::initializer_list<Vec> cols) {
    const std::size_t rows = cols.begin()->size();
    Matrix m(rows, cols.size());
    std::size_t c = 0;
    for (const Vec& v : cols) m.set_col(c++, v);
    return m;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("triplet loss analytic values") {
    CHECK(triplet_loss(e1, e1, e2, 0.2) == 0.0);
    CHECK(triplet_loss(e1, e1, e1, 0.2) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("triplet loss equals direct evaluation on random vectors") {
    Rng rng(21);
    for (int i = 0; i < 100; ++i) {
        const Vec a = random_vec(rng, 6), p = random_vec(rng, 6), n = random_vec(rng, 6);
        const double expect = std::max(0.0, oracle::cos_dist(a, p) - oracle::cos_dist(a, n) + 0.2);
        CHECK(triplet_loss(a, p, n, 0.2) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("COM Dist_wa analytic values") {
    CHECK(com_dist_wa(e1, e1, e2) == doctest::Approx(-1.0));
    CHECK(std::abs(com_dist_wa(e1, e1, e1)) < 1e-15);
    CHECK(com_dist_wa(e1, e2, ne1) == doctest::Approx(-0.5));
}

TEST_CASE("COM adaptive margin analytic values") {
    CHECK(com_adaptive_margin(e1, e1) == doctest::Approx(1.0));
    CHECK(std::abs(com_adaptive_margin(e1, e2)) < 1e-15);
    CHECK(com_adaptive_margin(e1, ne1) == doctest::Approx(-1.0));
}

TEST_CASE("COM-Triplet batch loss analytic values") {
    const auto adaptive = MarginSpec::adaptive();
    const Matrix a = columns({e1}), n_orth = columns({e2}), n_anti = columns({ne1});
    CHECK(com_triplet_loss(a, a, a, adaptive) == doctest::Approx(1.0));
    CHECK(com_triplet_loss(a, a, n_orth, adaptive) == 0.0);
    CHECK(com_triplet_loss(a, a, n_anti, adaptive) == 0.0);
    CHECK_THROWS_AS(com_triplet_loss(Matrix(2, 0), Matrix(2, 0), Matrix(2, 0), adaptive), EmptyBatch);
}

TEST_CASE("collapsed triplet costs 1 under COM and alpha under the traditional loss") {
    const Matrix a = columns({Vec{0.3, 0.7, -0.2}});
    CHECK(com_triplet_loss(a, a, a, MarginSpec::adaptive()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(triplet_loss(a.col(0), a.col(0), a.col(0), 0.2) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("COM-Triplet loss is zero when A == P and d(P, N) >= 1") {
    Rng rng(4);
    int checked = 0;
    while (checked < 100) {
        const Vec p = random_vec(rng, 4), n = random_vec(rng, 4);
        if (oracle::cos_dist(p, n) < 1.0) continue;
        const Matrix mp = columns({p}), mn = columns({n});
        CHECK(com_triplet_loss(mp, mp, mn, MarginSpec::adaptive()) == 0.0);
        ++checked;
    }
}

TEST_CASE("UDC margin and Dist_wa analytic values") {
    CHECK(udc_adaptive_margin(e1, e1) == doctest::Approx(1.0));
    CHECK(std::abs(udc_adaptive_margin(e1, e2)) < 1e-15);
    CHECK(udc_adaptive_margin(e1, ne1) == doctest::Approx(-1.0));
    CHECK(udc_dist_wa(e1, e1, e2, Label::minority) == doctest::Approx(-1.0));
    CHECK(udc_dist_wa(e2, e1, e2, Label::majority) == doctest::Approx(-1.0));
    // Anchor on the bisector of orthogonal means.
    const Vec mid{1, 1};
    const double d = oracle::cos_dist(mid, e1);
    const double expect = d - 0.5 * (d + oracle::cos_dist(e1, e2));
    CHECK(udc_dist_wa(mid, e1, e2, Label::minority) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(udc_dist_wa(mid, e1, e2, Label::majority) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("UDC Dist_wa at the own mean reduces to -d(mu_min, mu_maj)") {
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        const Vec mn = random_vec(rng, 5), mj = random_vec(rng, 5);
        CHECK(udc_dist_wa(mn, mn, mj, Label::minority) ==
              doctest::Approx(com_dist_wa(mn, mn, mj)).epsilon(1e-12));
        CHECK(udc_dist_wa(mn, mn, mj, Label::minority) ==
              doctest::Approx(-oracle::cos_dist(mn, mj)).epsilon(1e-12));
    }
}

TEST_CASE("weighted cross-entropy analytic values") {
    const ClassWeights unit{};
    const std::vector<int> one{1};
    CHECK(weighted_cross_entropy(one, Vec{1 - 1e-12}, unit) < 1e-11);
    CHECK(weighted_cross_entropy(one, Vec{0.5}, unit) == doctest::Approx(std::numbers::ln2).epsilon(1e-12));
    // Saturated wrong prediction stays finite through the clamp.
    CHECK(std::isfinite(weighted_cross_entropy(one, Vec{0.0}, unit)));
    CHECK_THROWS_AS(weighted_cross_entropy(std::vector<int>{1, 0}, Vec{0.5}, unit), LengthMismatch);
    CHECK_THROWS_AS(weighted_cross_entropy(std::vector<int>{}, Vec{}, unit), EmptyBatch);
}

TEST_CASE("weighted cross-entropy matches a hand-summed reference") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.index(40);
        std::vector<int> y(n);
        Vec p(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.bernoulli(0.3) ? 1 : 0;
            p[i] = rng.uniform(0.001, 0.999);
        }
        const ClassWeights w{rng.uniform(0.1, 10), rng.uniform(0.1, 10)};
        double ref = 0;
        for (std::size_t i = 0; i < n; ++i) {
            ref += y[i] == 1 ? -w.w_min * std::log(p[i]) : -w.w_maj * std::log(1 - p[i]);
        }
        ref /= static_cast<double>(n);
        CHECK(weighted_cross_entropy(y, p, w) == doctest::Approx(ref).epsilon(1e-12));

        Tape tape;
        Var probs = tape.leaf(Matrix(1, n, p));
        CHECK(weighted_cross_entropy(y, probs, w).scalar() == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("margin and class weight validation") {
    CHECK_THROWS_AS(MarginSpec::constant(-0.1), InvalidConfig);
    CHECK_THROWS_AS(MarginSpec::constant(2.5), InvalidConfig);
    CHECK_NOTHROW(MarginSpec::constant(0.0));
    CHECK_NOTHROW(MarginSpec::constant(2.0));
    CHECK_THROWS_AS((ClassWeights{0.0, 1.0}.validate()), InvalidConfig);
    CHECK_THROWS_AS((ClassWeights{1.0, NAN}.validate()), InvalidConfig);
}

TEST_CASE("losses are invariant to positive rescaling of embeddings") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix a = oracle::random_matrix(4, 3, rng), p = oracle::random_matrix(4, 3, rng),
               n = oracle::random_matrix(4, 3, rng);
        const double base = com_triplet_loss(a, p, n, MarginSpec::adaptive());
        const double base_t = com_triplet_loss(a, p, n, MarginSpec::constant(0.2));
        for (std::size_t c = 0; c < 3; ++c) {
            const double s = rng.uniform(0.1, 20);
            for (std::size_t r = 0; r < 4; ++r) {
                a(r, c) *= s;
                p(r, c) *= 2 * s;
                n(r, c) *= 0.5 * s;
            }
        }
        CHECK(com_triplet_loss(a, p, n, MarginSpec::adaptive()) == doctest::Approx(base).epsilon(1e-12));
        CHECK(com_triplet_loss(a, p, n, MarginSpec::constant(0.2)) == doctest::Approx(base_t).epsilon(1e-12));
    }
}

TEST_CASE("tape losses agree with the scalar versions") {
    Rng rng(19);
    const Matrix a = oracle::random_matrix(5, 4, rng), p = oracle::random_matrix(5, 4, rng),
                 n = oracle::random_matrix(5, 4, rng);
    Tape tape;
    Var va = tape.leaf(a), vp = tape.leaf(p), vn = tape.leaf(n);
    double ref_com = 0, ref_tri = 0;
    for (std::size_t c = 0; c < 4; ++c) {
        const Vec ac = a.col(c), pc = p.col(c), nc = n.col(c);
        ref_com += std::max(0.0, com_dist_wa(ac, pc, nc) + com_adaptive_margin(pc, nc));
        ref_tri += triplet_loss(ac, pc, nc, 0.3);
    }
    CHECK(com_triplet_loss(va, vp, vn, MarginSpec::adaptive()).scalar() == doctest::Approx(ref_com / 4).epsilon(1e-12));
    CHECK(triplet_loss(va, vp, vn, 0.3).scalar() == doctest::Approx(ref_tri / 4).epsilon(1e-12));

    const std::vector<Label> cls{Label::minority, Label::majority, Label::majority, Label::minority};
    Var mu_min = tape.leaf(Matrix::column(p.col(0))), mu_maj = tape.leaf(Matrix::column(n.col(0)));
    double ref_udc = 0;
    for (std::size_t c = 0; c < 4; ++c) {
        ref_udc += std::max(0.0, udc_dist_wa(a.col(c), p.col(0), n.col(0), cls[c]) +
                                     udc_adaptive_margin(p.col(0), n.col(0)));
    }
    CHECK(udc_com_loss(va, mu_min, mu_maj, cls, MarginSpec::adaptive()).scalar() ==
          doctest::Approx(ref_udc / 4).epsilon(1e-12));
}

TEST_CASE("loss gradients match finite differences away from the hinge") {
    Rng rng(23);
    const std::vector<Label> cls{Label::minority, Label::majority, Label::majority};
    auto com = [](Tape&, const std::vector<Var>& v) {
        return com_triplet_loss(v[0], v[1], v[2], MarginSpec::adaptive());
    };
    auto tri = [](Tape&, const std::vector<Var>& v) { return triplet_loss(v[0], v[1], v[2], 0.2); };
    auto udc = [&cls](Tape&, const std::vector<Var>& v) {
        return udc_com_loss(v[0], v[1], v[2], cls, MarginSpec::adaptive());
    };
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Matrix> triple{oracle::random_matrix(4, 3, rng), oracle::random_matrix(4, 3, rng),
                                   oracle::random_matrix(4, 3, rng)};
        CHECK(oracle::check_gradients(com, triple).max_rel_error < 1e-3);
        CHECK(oracle::check_gradients(tri, triple).max_rel_error < 1e-3);
        std::vector<Matrix> udc_in{triple[0], oracle::random_matrix(4, 1, rng), oracle::random_matrix(4, 1, rng)};
        CHECK(oracle::check_gradients(udc, udc_in).max_rel_error < 1e-3);
    }
}

TEST_CASE("logit cross-entropy agrees with the probability form and stays accurate when saturated") {
    Rng rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.index(20);
        std::vector<int> y(n);
        Vec z(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.bernoulli(0.4) ? 1 : 0;
            z[i] = rng.uniform(-6, 6);
            p[i] = 1.0 / (1.0 + std::exp(-z[i]));
        }
        const ClassWeights w{rng.uniform(0.1, 10), rng.uniform(0.1, 10)};
        Tape tape;
        CHECK(weighted_cross_entropy_logits(y, tape.leaf(Matrix(1, n, z)), w).scalar() ==
              doctest::Approx(weighted_cross_entropy(y, p, w)).epsilon(1e-10));
    }
    // -log(1 - sigmoid(z)) = z + log1p(exp(-z)) for large z.
    const std::vector<int> maj{0};
    const ClassWeights unit{1.0, 1.0};
    for (double zv : {20.0, 25.0}) {
        Tape tape;
        const double want = zv + std::log1p(std::exp(-zv));
        CHECK(weighted_cross_entropy_logits(maj, tape.leaf(Matrix(1, 1, zv)), unit).scalar() ==
              doctest::Approx(want).epsilon(1e-14));
    }
    // Beyond the clamp the loss equals the clamped-probability value and has no gradient.
    Tape tape;
    Var far = tape.leaf(Matrix(1, 1, 60.0));
    Var loss = weighted_cross_entropy_logits(maj, far, unit);
    CHECK(loss.scalar() == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
    tape.backward(loss);
    CHECK(tape.grad(far)[0] == 0.0);
}

TEST_CASE("logit cross-entropy gradients match finite differences") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.index(8);
        std::vector<int> y(n);
        for (auto& v : y) v = rng.bernoulli(0.5) ? 1 : 0;
        const ClassWeights w{rng.uniform(0.5, 5), rng.uniform(0.5, 5)};
        auto ce = [&](Tape&, const std::vector<Var>& v) { return weighted_cross_entropy_logits(y, v[0], w); };
        Matrix z = oracle::random_matrix(1, n, rng);
        for (double& v : z.data()) v *= 10.0;
        CHECK(oracle::check_gradients(ce, {z}).max_rel_error < 1e-3);
    }
}

}  // TEST_SUITE
