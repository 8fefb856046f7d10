#include "dcabc/errors.hpp"
#include "dcabc/models.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numbers>

namespace dcabc {
namespace {

constexpr double half_log_two_pi = 0.91893853320467274178;

double normal_logpdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - half_log_two_pi;
}

}  // namespace

PriorComponent PriorComponent::uniform(double lo, double hi) {
    if (!(hi > lo)) throw DomainError("uniform prior: upper bound must exceed lower bound");
    return {PriorKind::uniform, lo, hi, lo, hi};
}

PriorComponent PriorComponent::normal(double mean, double sd) {
    if (!(sd > 0)) throw DomainError("normal prior: sd must be positive");
    return {PriorKind::normal, mean, sd, -INFINITY, INFINITY};
}

PriorComponent PriorComponent::truncated_normal(double mean, double sd, double lo, double hi) {
    if (!(sd > 0) || !(hi > lo)) throw DomainError("truncated normal prior: invalid parameters");
    return {PriorKind::truncated_normal, mean, sd, lo, hi};
}

PriorComponent PriorComponent::log_normal(double meanlog, double sdlog) {
    if (!(sdlog > 0)) throw DomainError("log-normal prior: sdlog must be positive");
    return {PriorKind::log_normal, meanlog, sdlog, 0.0, INFINITY};
}

double PriorComponent::log_density(double x, bool log_scale_coordinate) const {
    if (!std::isfinite(x)) return log_zero;
    switch (kind) {
        case PriorKind::uniform:
            return (x > lower && x < upper) ? -std::log(upper - lower) : log_zero;
        case PriorKind::normal:
            return normal_logpdf(x, a, b);
        case PriorKind::truncated_normal: {
            if (!(x > lower && x < upper)) return log_zero;
            const boost::math::normal_distribution<double> nd(a, b);
            const double mass = boost::math::cdf(nd, upper) - boost::math::cdf(nd, lower);
            return normal_logpdf(x, a, b) - std::log(mass);
        }
        case PriorKind::log_normal:
            if (log_scale_coordinate) return normal_logpdf(x, a, b);
            if (!(x > 0)) return log_zero;
            return normal_logpdf(std::log(x), a, b) - std::log(x);
    }
    return log_zero;
}

double PriorComponent::sample(RandomSource& rng, bool log_scale_coordinate) const {
    switch (kind) {
        case PriorKind::uniform:
            return lower + (upper - lower) * rng.uniform();
        case PriorKind::normal:
            return a + b * rng.normal();
        case PriorKind::truncated_normal: {
            // Inverse CDF restricted to [Phi(lo), Phi(hi)].
            const boost::math::normal_distribution<double> nd(a, b);
            const double plo = boost::math::cdf(nd, lower);
            const double phi = boost::math::cdf(nd, upper);
            return boost::math::quantile(nd, plo + (phi - plo) * rng.uniform());
        }
        case PriorKind::log_normal: {
            const double z = a + b * rng.normal();
            return log_scale_coordinate ? z : std::exp(z);
        }
    }
    return 0.0;
}

Prior::Prior(std::vector<PriorComponent> components, std::vector<bool> log_scale)
    : components_(std::move(components)), log_scale_(std::move(log_scale)) {
    if (components_.size() != log_scale_.size()) throw DomainError("Prior: component/log_scale length mismatch");
}

double Prior::log_density(const Vector& theta) const {
    if (static_cast<std::size_t>(theta.size()) != components_.size()) throw DomainError("Prior: dimension mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < components_.size(); ++i) {
        const double lp = components_[i].log_density(theta[static_cast<Eigen::Index>(i)], log_scale_[i]);
        if (lp == log_zero) return log_zero;
        total += lp;
    }
    return total;
}

Vector Prior::sample(RandomSource& rng) const {
    Vector out(static_cast<Eigen::Index>(components_.size()));
    for (std::size_t i = 0; i < components_.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = components_[i].sample(rng, log_scale_[i]);
    return out;
}

}  // namespace dcabc
