#include "dcabc/errors.hpp"
#include "dcabc/inference.hpp"
#include "dcabc/random.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <map>

using namespace dcabc;

namespace {
// Weighted normal equations solved by explicit inverse.
Matrix normal_equations(const Matrix& draws, const Matrix& sims, const Vector& s_obs, const KernelSpec& k) {
    const Eigen::Index n = draws.rows(), ds = sims.cols();
    Matrix z(n, ds + 1);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        z(i, 0) = 1;
        z.row(i).tail(ds) = sims.row(i) - s_obs.transpose();
        w[i] = std::exp(log_kernel(k, SummaryVector(s_obs), SummaryVector(sims.row(i).transpose())));
    }
    const Matrix ztw = z.transpose() * w.asDiagonal();
    return (ztw * z).inverse() * (ztw * draws);
}
}  // namespace

TEST_CASE("regression adjustment recovers an exact linear relation") {
    RandomSource rng(1, 0);
    const int n = 400;
    Matrix sims(n, 3), draws(n, 2);
    Matrix beta(3, 2);
    beta << 0.5, -1, 2, 0.25, -0.75, 1.5;
    Vector alpha(2);
    alpha << 1.0, -3.0;
    Vector s_obs(3);
    s_obs << 0.1, -0.2, 0.3;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) sims(i, j) = s_obs[j] + rng.normal();
        draws.row(i) = alpha.transpose() + (sims.row(i) - s_obs.transpose()) * beta;
    }
    const KernelSpec k(KernelKind::gaussian, 1.5, WeightMatrix::unit(3));
    const AdjustmentResult r = regression_adjust(draws, sims, SummaryVector(s_obs), k);
    CHECK((r.beta_hat - beta).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((r.alpha_hat - alpha).cwiseAbs().maxCoeff() < 1e-10);
    for (int i = 0; i < n; ++i) CHECK((r.adjusted_draws.row(i) - alpha.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(r.covariance.cwiseAbs().maxCoeff() < 1e-18);

    // noisy data: compare against the normal equations
    for (int i = 0; i < n; ++i) draws.row(i) += Eigen::RowVector2d(rng.normal(), rng.normal());
    const AdjustmentResult q = regression_adjust(draws, sims, SummaryVector(s_obs), k);
    const Matrix oracle = normal_equations(draws, sims, s_obs, k);
    CHECK((q.alpha_hat - oracle.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((q.beta_hat - oracle.bottomRows(3)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((q.center - sample_mean(q.adjusted_draws)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("regression adjustment failure modes") {
    Matrix sims = Matrix::Zero(10, 2), draws = Matrix::Ones(10, 1);
    for (int i = 0; i < 10; ++i) sims(i, 0) = sims(i, 1) = i;
    const KernelSpec k(KernelKind::gaussian, 5.0, WeightMatrix::unit(2));
    CHECK_THROWS_AS(regression_adjust(draws, sims, SummaryVector(Vector::Zero(2)), k, CenterRule::mean,
                                      RidgeFallback::disabled),
                    RegressionError);
    const auto r = regression_adjust(draws, sims, SummaryVector(Vector::Zero(2)), k);
    CHECK(r.ridge_used);
    CHECK_THROWS_AS(regression_adjust(draws.topRows(3), sims.topRows(3), SummaryVector(Vector::Zero(2)), k),
                    DomainError);
    const KernelSpec u(KernelKind::uniform, 0.1, WeightMatrix::unit(2));
    CHECK_THROWS_AS(regression_adjust(draws, (sims.array() + 100).matrix(), SummaryVector(Vector::Zero(2)), u),
                    RegressionError);
}

TEST_CASE("histogram mode") {
    RandomSource rng(2, 0);
    Vector v(20000);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = (i % 4 == 0) ? 10 + rng.normal() : 2 + 0.5 * rng.normal();
    CHECK(histogram_mode(v) == doctest::Approx(2.0).epsilon(0.1));
    Vector flat = Vector::Constant(5, 3.0);
    CHECK(histogram_mode(flat) == 3.0);
}

TEST_CASE("eigenvalue decay and asymptotic SE") {
    RandomSource rng(3, 0);
    std::map<int, Matrix> by_k;
    for (int k : {1, 4, 16}) {
        Matrix d(5000, 2);
        for (int i = 0; i < 5000; ++i) d.row(i) << rng.normal() / std::sqrt(k), 2 * rng.normal() / std::sqrt(k);
        by_k[k] = d;
    }
    const auto decay = eigenvalue_decay(by_k);
    REQUIRE(decay.size() == 3);
    CHECK(decay[0].first == 1);
    CHECK(decay[0].second == doctest::Approx(4.0).epsilon(0.05));
    CHECK(decay[2].second == doctest::Approx(0.25).epsilon(0.05));
    CHECK(decay[0].second > decay[1].second);
    CHECK(decay[1].second > decay[2].second);

    Matrix c(3, 3);
    c << 0.01, 0.002, 0, 0.002, 0.04, 0, 0, 0, 0.25;
    const Vector se = asymptotic_se(c, 15);
    for (int j = 0; j < 3; ++j) CHECK(se[j] == std::sqrt(15 * c(j, j)));
    CHECK_THROWS_AS(asymptotic_se(c, 0), DomainError);
    c(1, 1) = -1;
    CHECK_THROWS_AS(asymptotic_se(c, 2), NumericalError);
}

TEST_CASE("parametric bootstrap summaries and determinism") {
    // estimator: sample mean of 100 N(theta, 1) draws
    const ReplicateSimulator sim = [](const Vector& th, RandomSource& r) {
        Matrix o(100, 1);
        for (int i = 0; i < 100; ++i) o(i, 0) = th[0] + r.normal();
        std::vector<double> t(100);
        for (int i = 0; i < 100; ++i) t[i] = i;
        return Dataset(t, o);
    };
    const ReplicateEstimator est = [](const Dataset& d, RandomSource&) {
        return Vector::Constant(1, d.observations().col(0).mean());
    };
    const Vector th = Vector::Constant(1, 2.0);
    const RandomSource rng(4, 0);
    const BootstrapReport a = parametric_bootstrap(sim, est, th, 400, rng, 1);
    const BootstrapReport b = parametric_bootstrap(sim, est, th, 400, rng, 4);
    CHECK(a.replicate_estimates == b.replicate_estimates);
    CHECK(a.missing == 0);
    CHECK(a.means[0] == doctest::Approx(2.0).epsilon(0.01));
    CHECK(a.rmse[0] == doctest::Approx(0.1).epsilon(0.15));
    CHECK(a.bias[0] == doctest::Approx(a.means[0] - 2.0));
    CHECK(a.percentile_2_5[0] < 2.0);
    CHECK(a.percentile_97_5[0] > 2.0);

    const BootstrapReport two = parametric_bootstrap(sim, est, th, 2, rng);
    CHECK(two.replicate_estimates.rows() == 2);
    CHECK_THROWS_AS(parametric_bootstrap(sim, est, th, 1, rng), DomainError);
}

TEST_CASE("bootstrap tolerates a few failures and rejects many") {
    const ReplicateSimulator sim = [](const Vector&, RandomSource&) { return Dataset({0.0}, Matrix::Zero(1, 1)); };
    int calls = 0;
    const ReplicateEstimator sometimes = [&calls](const Dataset&, RandomSource&) {
        if (calls++ % 10 == 0) throw NumericalError("boom");
        return Vector::Constant(1, 1.0 * calls);
    };
    const BootstrapReport r = parametric_bootstrap(sim, sometimes, Vector::Zero(1), 20, RandomSource(5, 0));
    CHECK(r.missing == 2);
    CHECK(r.replicate_estimates.rows() == 18);
    CHECK(r.warnings.size() >= 2);
    const ReplicateEstimator never = [](const Dataset&, RandomSource&) -> Vector { throw NumericalError("x"); };
    CHECK_THROWS_AS(parametric_bootstrap(sim, never, Vector::Zero(1), 10, RandomSource(5, 0)), BootstrapError);
}
