#pragma once

#include "dcabc/core.hpp"
#include "dcabc/random.hpp"

#include <span>

namespace dcabc {

// Adaptive Gaussian Metropolis random walk (Haario-style).
//
// `covariance` is the proposal covariance Sigma_j used by rw_propose. After
// each adaptation it equals scale * (empirical covariance of the history) +
// jitter * I, so it stays symmetric positive definite.
struct AdaptiveRWState {
    Matrix covariance;
    Vector running_mean;
    long sample_count = 0;
    long adapt_interval = 1000;
    double scale = 0.0;
    double jitter = 1e-10;

    // Diagonal (0.1 |theta0_i| + 0.01)^2 start, scale 2.38^2 / d.
    static AdaptiveRWState initial(const Vector& theta0, long adapt_interval = 1000);
    Eigen::Index dim() const { return covariance.rows(); }
};

// current + N(0, covariance).
Vector rw_propose(const AdaptiveRWState& state, const Vector& current, RandomSource& rng);

// Log density of the random-walk step from -> to (unnormalised). Symmetric in
// its arguments, which is why the samplers drop the u_1 ratio.
double rw_log_density(const AdaptiveRWState& state, const Vector& from, const Vector& to);

// Replace the covariance with scale * cov(history) + jitter * I.
AdaptiveRWState rw_adapt(const AdaptiveRWState& state, std::span<const Vector> history);

// Running first and second moments so adaptation does not rescan the history.
class CovarianceAccumulator {
public:
    explicit CovarianceAccumulator(Eigen::Index dim);
    void add(const Vector& x);
    long count() const noexcept { return count_; }
    Vector mean() const;
    // Unbiased covariance; zero for fewer than 2 samples.
    Matrix covariance() const;

private:
    long count_ = 0;
    Vector shift_;  // first sample, subtracted for numerical stability
    Vector sum_;
    Matrix sum_outer_;
};

// Updates `state` from the accumulator: same formula as rw_adapt.
void rw_adapt_from(AdaptiveRWState& state, const CovarianceAccumulator& acc);

// Gaussian independence proposal N(center, covariance) for the cloning stage.
class IndependenceSamplerSpec {
public:
    IndependenceSamplerSpec(Vector center, Matrix covariance);

    const Vector& center() const noexcept { return center_; }
    const Matrix& covariance() const noexcept { return covariance_; }
    const Matrix& cholesky() const noexcept { return lower_; }
    Eigen::Index dim() const { return center_.size(); }

private:
    Vector center_;
    Matrix covariance_;
    Matrix lower_;
};

Vector mis_propose(const IndependenceSamplerSpec& spec, RandomSource& rng);

// -0.5 (x - c)' Sigma^{-1} (x - c); the normalising constant is dropped.
double mis_log_density(const IndependenceSamplerSpec& spec, const Vector& point);

// Lower Cholesky factor; throws NumericalError when the matrix is not SPD.
Matrix cholesky_lower(const Matrix& covariance);

}  // namespace dcabc
