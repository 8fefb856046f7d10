#include "dcabc/errors.hpp"
#include "dcabc/kernels.hpp"
#include "dcabc/random.hpp"
#include "dcabc/summaries.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace dcabc;

namespace {
SummaryVector sv(std::initializer_list<double> v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x[i++] = d;
    return SummaryVector(x);
}

// Scalar-loop oracle for the Gaussian log kernel.
double oracle_log_kernel(const std::vector<double>& omega2, double delta, const std::vector<double>& obs,
                         const std::vector<double>& sim) {
    double u = 0;
    for (std::size_t j = 0; j < obs.size(); ++j) u += (sim[j] - obs[j]) * (sim[j] - obs[j]) / omega2[j];
    return -u / (2 * delta * delta);
}
}  // namespace

TEST_CASE("log kernel values") {
    const KernelSpec g1(KernelKind::gaussian, 1.0, WeightMatrix::unit(1));
    CHECK(log_kernel(g1, sv({0}), sv({0})) == 0.0);
    CHECK(log_kernel(g1, sv({0}), sv({1})) == doctest::Approx(-0.5));

    const KernelSpec u1(KernelKind::uniform, 1.0, WeightMatrix::unit(1));
    CHECK(log_kernel(u1, sv({0}), sv({0})) == 0.0);
    CHECK(log_kernel(u1, sv({0}), sv({1})) == 0.0);
    CHECK(log_kernel(u1, sv({0}), sv({1.0001})) == log_zero);

    Vector diag(2);
    diag << 4, 1;
    const KernelSpec g2(KernelKind::gaussian, 0.5, WeightMatrix(diag));
    CHECK(log_kernel(g2, sv({0, 0}), sv({2, 1})) == doctest::Approx(-4.0).epsilon(1e-14));
    CHECK(log_kernel(g2, sv({0, 0}), sv({2, 1})) ==
          doctest::Approx(oracle_log_kernel({4, 1}, 0.5, {0, 0}, {2, 1})).epsilon(1e-14));

    CHECK_THROWS_AS(log_kernel(g2, sv({0}), sv({2, 1})), DomainError);
    CHECK_THROWS_AS(KernelSpec(KernelKind::gaussian, 0.0, WeightMatrix::unit(1)), DomainError);
    CHECK_THROWS_AS(WeightMatrix(Vector::Zero(2)), DomainError);
}

TEST_CASE("random kernel evaluations agree with the scalar oracle") {
    RandomSource rng(5, 0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> w(4), o(4), s(4);
        Vector wd(4), ov(4), svv(4);
        for (int j = 0; j < 4; ++j) {
            w[j] = wd[j] = 0.1 + rng.uniform() * 3;
            o[j] = ov[j] = rng.normal() * 5;
            s[j] = svv[j] = rng.normal() * 5;
        }
        const double delta = 0.05 + rng.uniform();
        const KernelSpec k(KernelKind::gaussian, delta, WeightMatrix(wd));
        CHECK(log_kernel(k, SummaryVector(ov), SummaryVector(svv)) ==
              doctest::Approx(oracle_log_kernel(w, delta, o, s)).epsilon(1e-12));
    }
}

TEST_CASE("cloned log kernel sums per-clone terms") {
    const KernelSpec g(KernelKind::gaussian, 1.0, WeightMatrix::unit(1));
    const std::vector<SummaryVector> one{sv({1})};
    CHECK(cloned_log_kernel(g, sv({0}), one) == log_kernel(g, sv({0}), sv({1})));
    const std::vector<SummaryVector> same(3, sv({0}));
    CHECK(cloned_log_kernel(g, sv({0}), same) == 0.0);
    // per-clone -0.5 and -1.5
    const std::vector<SummaryVector> two{sv({1}), sv({std::sqrt(3.0)})};
    CHECK(cloned_log_kernel(g, sv({0}), two) == doctest::Approx(-2.0));
    CHECK_THROWS_AS(cloned_log_kernel(g, sv({0}), std::vector<SummaryVector>{}), DomainError);

    const KernelSpec u(KernelKind::uniform, 1.0, WeightMatrix::unit(1));
    const std::vector<SummaryVector> mixed{sv({0.5}), sv({3})};
    CHECK(cloned_log_kernel(u, sv({0}), mixed) == log_zero);
}

TEST_CASE("property: kernel depends on delta^2 Omega only") {
    RandomSource rng(8, 0);
    for (int rep = 0; rep < 100; ++rep) {
        Vector wd(3), o(3), s(3);
        for (int j = 0; j < 3; ++j) {
            wd[j] = 0.2 + rng.uniform();
            o[j] = rng.normal();
            s[j] = rng.normal();
        }
        const double delta = 0.1 + rng.uniform();
        const double c = 0.1 + 5 * rng.uniform();
        for (const auto kind : {KernelKind::gaussian, KernelKind::uniform}) {
            const KernelSpec a(kind, delta, WeightMatrix(wd));
            const KernelSpec b(kind, delta / c, WeightMatrix(wd * c * c));
            const double la = log_kernel(a, SummaryVector(o), SummaryVector(s));
            const double lb = log_kernel(b, SummaryVector(o), SummaryVector(s));
            if (la == log_zero) {
                CHECK(lb == log_zero);
            } else {
                CHECK(std::abs(la - lb) <= 1e-12 * std::max(1.0, std::abs(la)));
            }
        }
    }
}

TEST_CASE("property: kernel non-increasing along a ray and K copies give K times") {
    const KernelSpec g(KernelKind::gaussian, 0.7, WeightMatrix::from_scales(Vector::Constant(2, 0.5)));
    Vector dir(2);
    dir << 0.3, -1.2;
    double prev = 0.0;
    for (int i = 1; i <= 50; ++i) {
        const double v = log_kernel(g, SummaryVector(Vector::Zero(2)), SummaryVector(dir * (0.1 * i)));
        CHECK(v <= prev);
        prev = v;
    }
    const SummaryVector s(dir);
    for (int k = 1; k <= 6; ++k) {
        const std::vector<SummaryVector> copies(static_cast<std::size_t>(k), s);
        CHECK(cloned_log_kernel(g, SummaryVector(Vector::Zero(2)), copies) ==
              doctest::Approx(k * log_kernel(g, SummaryVector(Vector::Zero(2)), s)).epsilon(1e-14));
    }
}

TEST_CASE("pilot weights: MAD and sd") {
    const std::vector<SummaryVector> s{sv({1, 10}), sv({2, 12}), sv({3, 11})};
    const WeightMatrix w = pilot_weights(s, PilotMethod::mad, 0);
    CHECK(w.scales()[0] == doctest::Approx(1.0));
    CHECK(w.diagonal()[0] == doctest::Approx(1.0));

    const std::vector<SummaryVector> flat{sv({5}), sv({5}), sv({5})};
    try {
        pilot_weights(flat, PilotMethod::mad, 0);
        FAIL("expected DegenerateStatisticError");
    } catch (const DegenerateStatisticError& e) {
        CHECK(e.coordinate() == 0);
    }

    const std::vector<SummaryVector> sd_in{sv({1}), sv({2}), sv({3}), sv({4})};
    // unbiased sd of 1..4 = sqrt(5/3)
    CHECK(pilot_weights(sd_in, PilotMethod::sd, 0).diagonal()[0] == doctest::Approx(5.0 / 3.0));
    // burn-in drops leading entries
    const std::vector<SummaryVector> burn{sv({100}), sv({1}), sv({2}), sv({3})};
    CHECK(pilot_weights(burn, PilotMethod::mad, 1).scales()[0] == doctest::Approx(1.0));
    CHECK_THROWS_AS(pilot_weights(burn, PilotMethod::mad, 3), DomainError);
}

TEST_CASE("property: MAD weights are shift invariant and scale equivariant") {
    RandomSource rng(13, 0);
    std::vector<SummaryVector> base;
    for (int i = 0; i < 101; ++i) base.push_back(sv({rng.normal(), 3 * rng.normal()}));
    const Vector w0 = pilot_weights(base, PilotMethod::mad, 0).scales();
    for (double c : {-2.5, 0.3, 7.0}) {
        std::vector<SummaryVector> shifted, scaled;
        for (const auto& s : base) {
            shifted.emplace_back((s.values().array() + 4.2).matrix());
            scaled.emplace_back(s.values() * c);
        }
        const Vector ws = pilot_weights(shifted, PilotMethod::mad, 0).scales();
        const Vector wc = pilot_weights(scaled, PilotMethod::mad, 0).scales();
        for (int j = 0; j < 2; ++j) {
            CHECK(ws[j] == doctest::Approx(w0[j]).epsilon(1e-12));
            CHECK(wc[j] == doctest::Approx(std::abs(c) * w0[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("median") {
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 3, 2}) == 2.5);
}

TEST_CASE("semi-automatic summaries: identity and noise features") {
    RandomSource rng(21, 0);
    const int n = 500;
    Matrix params(n, 2), features(n, 2);
    for (int i = 0; i < n; ++i) {
        params(i, 0) = rng.normal();
        params(i, 1) = rng.normal();
    }
    features = params;
    const SummaryProjection p = semi_automatic_summaries(params, features);
    CHECK((p.coefficients - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(p.intercept.cwiseAbs().maxCoeff() < 1e-8);

    Matrix theta(4000, 1), noise(4000, 1);
    for (int i = 0; i < 4000; ++i) {
        theta(i, 0) = 1 + rng.normal();
        noise(i, 0) = rng.normal();
    }
    const SummaryProjection q = semi_automatic_summaries(theta, noise);
    CHECK(std::abs(q.coefficients(0, 0)) < 0.1);
    CHECK(q.intercept[0] == doctest::Approx(1.0).epsilon(0.1));

    Matrix rankdef(n, 2);
    rankdef.col(0) = params.col(0);
    rankdef.col(1) = 2 * params.col(0);
    CHECK_THROWS_AS(semi_automatic_summaries(params, rankdef, RidgeFallback::disabled), RegressionError);
    const SummaryProjection r = semi_automatic_summaries(params, rankdef, RidgeFallback::enabled);
    CHECK(r.ridge_used);
    CHECK_THROWS_AS(semi_automatic_summaries(params, features.topRows(10)), DomainError);
}

TEST_CASE("projection JSON round trip and raw-and-squared features") {
    SummaryProjection p;
    p.intercept = Vector::Constant(2, 0.5);
    p.coefficients = Matrix::Random(2, 3);
    const nlohmann::json j = p;
    const SummaryProjection q = j.get<SummaryProjection>();
    CHECK(q.intercept == p.intercept);
    CHECK(q.coefficients == p.coefficients);
    Vector f(3);
    f << 1, 2, 3;
    CHECK(q.apply(f).values().isApprox(p.intercept + p.coefficients * f));

    Matrix obs(3, 1);
    obs << 1, -2, 3;
    const Vector feats = raw_and_squared_features(Dataset({0, 1, 2}, obs));
    REQUIRE(feats.size() == 6);
    CHECK(feats[1] == -2);
    CHECK(feats[4] == 4);
}
