#include "dcabc/proposals.hpp"
#include "dcabc/errors.hpp"

#include <cmath>

namespace dcabc {

Matrix cholesky_lower(const Matrix& covariance) {
    if (covariance.rows() != covariance.cols()) throw NumericalError("covariance is not square");
    if (!covariance.allFinite()) throw NumericalError("covariance has non-finite entries");
    Eigen::LLT<Matrix> llt(covariance);
    if (llt.info() != Eigen::Success) throw NumericalError("covariance is not symmetric positive definite");
    return llt.matrixL();
}

namespace {
Vector standard_normal(Eigen::Index d, RandomSource& rng) {
    Vector z(d);
    for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
    return z;
}
}  // namespace

AdaptiveRWState AdaptiveRWState::initial(const Vector& theta0, long adapt_interval) {
    AdaptiveRWState s;
    const Eigen::Index d = theta0.size();
    Vector sd = (0.1 * theta0.array().abs() + 0.01).matrix();
    s.covariance = sd.array().square().matrix().asDiagonal();
    s.running_mean = theta0;
    s.sample_count = 0;
    s.adapt_interval = adapt_interval;
    s.scale = 2.38 * 2.38 / static_cast<double>(d);
    return s;
}

Vector rw_propose(const AdaptiveRWState& state, const Vector& current, RandomSource& rng) {
    if (state.dim() != current.size()) throw DomainError("rw_propose: covariance dimension mismatch");
    const Matrix lower = cholesky_lower(state.covariance);
    return current + lower * standard_normal(current.size(), rng);
}

double rw_log_density(const AdaptiveRWState& state, const Vector& from, const Vector& to) {
    const Vector diff = to - from;
    return -0.5 * diff.dot(state.covariance.llt().solve(diff));
}

AdaptiveRWState rw_adapt(const AdaptiveRWState& state, std::span<const Vector> history) {
    if (history.size() < 2) throw DomainError("rw_adapt: need at least 2 history points");
    CovarianceAccumulator acc(history.front().size());
    for (const auto& h : history) acc.add(h);
    AdaptiveRWState out = state;
    rw_adapt_from(out, acc);
    return out;
}

CovarianceAccumulator::CovarianceAccumulator(Eigen::Index dim)
    : shift_(Vector::Zero(dim)), sum_(Vector::Zero(dim)), sum_outer_(Matrix::Zero(dim, dim)) {}

void CovarianceAccumulator::add(const Vector& x) {
    if (x.size() != sum_.size()) throw DomainError("CovarianceAccumulator: dimension mismatch");
    if (count_ == 0) shift_ = x;
    const Vector y = x - shift_;
    sum_ += y;
    sum_outer_.noalias() += y * y.transpose();
    ++count_;
}

Vector CovarianceAccumulator::mean() const {
    if (count_ == 0) return shift_;
    return shift_ + sum_ / static_cast<double>(count_);
}

Matrix CovarianceAccumulator::covariance() const {
    const Eigen::Index d = sum_.size();
    if (count_ < 2) return Matrix::Zero(d, d);
    const double n = static_cast<double>(count_);
    Matrix c = (sum_outer_ - sum_ * sum_.transpose() / n) / (n - 1.0);
    return 0.5 * (c + c.transpose());
}

void rw_adapt_from(AdaptiveRWState& state, const CovarianceAccumulator& acc) {
    const Eigen::Index d = state.dim();
    state.covariance = state.scale * acc.covariance() + state.jitter * Matrix::Identity(d, d);
    state.running_mean = acc.mean();
    state.sample_count = acc.count();
}

IndependenceSamplerSpec::IndependenceSamplerSpec(Vector center, Matrix covariance)
    : center_(std::move(center)), covariance_(std::move(covariance)) {
    if (covariance_.rows() != center_.size()) throw DomainError("IndependenceSamplerSpec: dimension mismatch");
    lower_ = cholesky_lower(covariance_);
}

Vector mis_propose(const IndependenceSamplerSpec& spec, RandomSource& rng) {
    return spec.center() + spec.cholesky() * standard_normal(spec.dim(), rng);
}

double mis_log_density(const IndependenceSamplerSpec& spec, const Vector& point) {
    if (point.size() != spec.dim()) throw DomainError("mis_log_density: dimension mismatch");
    const Vector z = spec.cholesky().triangularView<Eigen::Lower>().solve(point - spec.center());
    return -0.5 * z.squaredNorm();
}

}  // namespace dcabc
