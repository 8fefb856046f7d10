#include "dcabc/errors.hpp"
#include "dcabc/models.hpp"

#include <cmath>
#include <limits>

namespace dcabc {
namespace {

void check_times(const std::vector<double>& times, double x0) {
    if (times.empty() || times.front() != 0.0) throw DomainError("gompertz: times must start at 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw DomainError("gompertz: times must be strictly increasing");
    if (!(x0 > 0.0)) throw DomainError("gompertz: X_0 must be positive");
}

}  // namespace

double GompertzParams::B(double x0) const { return logA - std::log(x0); }

Vector gompertz_latent(const GompertzParams& p, const std::vector<double>& times, double x0, RandomSource& rng) {
    check_times(times, x0);
    const double B = p.B(x0);
    const double C = std::exp(p.logC);
    const double sigma = std::exp(p.logSigma);
    Vector logx(static_cast<Eigen::Index>(times.size()));
    double w = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i > 0) w += std::sqrt(times[i] - times[i - 1]) * rng.normal();
        const double t = times[i];
        logx[static_cast<Eigen::Index>(i)] = p.logA - B * std::exp(-C * t) - 0.5 * sigma * sigma * t + sigma * w;
    }
    return logx;
}

Dataset gompertz_simulate(const GompertzParams& p, const std::vector<double>& times, double x0, RandomSource& rng) {
    Vector logx = gompertz_latent(p, times, x0, rng);
    const double sigma_eps = std::exp(p.logSigmaEps);
    Matrix obs(logx.size(), 1);
    for (Eigen::Index i = 0; i < logx.size(); ++i) obs(i, 0) = logx[i] + sigma_eps * rng.normal();
    return Dataset(times, std::move(obs));
}

double gompertz_measurement_log_density(const Dataset& y, const Vector& latent, double sigma_eps) {
    if (y.dim() != 1 || static_cast<Eigen::Index>(y.rows()) != latent.size())
        throw DomainError("gompertz_measurement_log_density: dimension mismatch");
    if (!(sigma_eps > 0.0)) throw DomainError("gompertz_measurement_log_density: sigma_eps must be positive");
    constexpr double half_log_two_pi = 0.91893853320467274178;
    double total = 0.0;
    for (Eigen::Index i = 0; i < latent.size(); ++i) {
        const double z = (y.observations()(i, 0) - latent[i]) / sigma_eps;
        total += -0.5 * z * z - std::log(sigma_eps) - half_log_two_pi;
    }
    return total;
}

Vector gompertz_euler_latent(const GompertzParams& p, const std::vector<double>& times, double x0, int substeps,
                             RandomSource& rng) {
    check_times(times, x0);
    if (substeps < 1) throw DomainError("gompertz_euler_latent: substeps must be >= 1");
    const double B = p.B(x0);
    const double C = std::exp(p.logC);
    const double sigma = std::exp(p.logSigma);
    Vector logx(static_cast<Eigen::Index>(times.size()));
    double x = x0;
    logx[0] = std::log(x0);
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double h = (times[i] - times[i - 1]) / substeps;
        double t = times[i - 1];
        for (int s = 0; s < substeps; ++s) {
            x += B * C * std::exp(-C * t) * x * h + sigma * x * std::sqrt(h) * rng.normal();
            t += h;
        }
        logx[static_cast<Eigen::Index>(i)] = x > 0.0 ? std::log(x) : std::numeric_limits<double>::quiet_NaN();
    }
    return logx;
}

std::vector<double> normalized_times(std::size_t n) {
    if (n == 0) throw DomainError("normalized_times: need at least one interval");
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = static_cast<double>(i) / static_cast<double>(n);
    return t;
}

ModelSpec make_gompertz_model(std::vector<double> times, double x0, double sigma_eps) {
    check_times(times, x0);
    if (!(sigma_eps > 0.0)) throw DomainError("gompertz: sigma_eps must be positive");
    ModelSpec m;
    m.name = "gompertz";
    m.names = {"logA", "logC", "logSigma"};
    m.log_scale = {true, true, true};
    m.prior = Prior({PriorComponent::uniform(1.0, 15.0), PriorComponent::uniform(0.5, 4.0),
                     PriorComponent::log_normal(0.1, 0.2)},
                    m.log_scale);
    const double log_sigma_eps = std::log(sigma_eps);
    auto params = [log_sigma_eps](const Vector& theta) {
        return GompertzParams{theta[0], theta[1], theta[2], log_sigma_eps};
    };
    m.simulate = [times, x0, params](const Vector& theta, RandomSource& rng) {
        return gompertz_simulate(params(theta), times, x0, rng);
    };
    m.simulate_latent = [times, x0, params](const Vector& theta, RandomSource& rng) {
        return gompertz_latent(params(theta), times, x0, rng);
    };
    m.measurement_log_density = [sigma_eps](const Dataset& y, const Vector& latent, const Vector&) {
        return gompertz_measurement_log_density(y, latent, sigma_eps);
    };
    return m;
}

}  // namespace dcabc
