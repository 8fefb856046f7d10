#include "dcabc/errors.hpp"
#include "dcabc/models.hpp"
#include "dcabc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dcabc {
namespace {

void check_positive(const Dataset& data) {
    if (data.dim() != 2) throw DomainError("gbm2d: two observation columns expected");
    if (!(data.observations().array() > 0.0).all()) throw DomainError("gbm2d: observations must be positive");
}

struct LogIncrements {
    std::vector<double> dt, dx, dy;
};

LogIncrements log_increments(const Dataset& data) {
    check_positive(data);
    LogIncrements inc;
    const auto& obs = data.observations();
    const auto& t = data.times();
    for (std::size_t i = 1; i < data.rows(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        inc.dt.push_back(t[i] - t[i - 1]);
        inc.dx.push_back(std::log(obs(r, 0)) - std::log(obs(r - 1, 0)));
        inc.dy.push_back(std::log(obs(r, 1)) - std::log(obs(r - 1, 1)));
    }
    return inc;
}

}  // namespace

void Gbm2dParams::validate() const {
    if (!(std::abs(rho) < 1.0)) throw DomainError("gbm2d: |rho| must be < 1");
    if (!std::isfinite(mu1) || !std::isfinite(mu2) || !std::isfinite(logSigma1) || !std::isfinite(logSigma2))
        throw DomainError("gbm2d: non-finite parameter");
}

Vector Gbm2dParams::to_vector() const {
    Vector v(5);
    v << mu1, logSigma1, mu2, logSigma2, rho;
    return v;
}

Gbm2dParams Gbm2dParams::from_vector(const Vector& theta) {
    if (theta.size() != 5) throw DomainError("gbm2d: parameter vector must have 5 entries");
    return {theta[0], theta[1], theta[2], theta[3], theta[4]};
}

Dataset gbm2d_simulate(const Gbm2dParams& p, const std::vector<double>& times, double x0, double y0,
                       RandomSource& rng) {
    p.validate();
    if (!(x0 > 0.0) || !(y0 > 0.0)) throw DomainError("gbm2d_simulate: initial state must be positive");
    if (times.empty()) throw DomainError("gbm2d_simulate: no times");
    const double s1 = std::exp(p.logSigma1);
    const double s2 = std::exp(p.logSigma2);
    const double ortho = std::sqrt(1.0 - p.rho * p.rho);
    const double drift1 = p.mu1 - 0.5 * s1 * s1;
    const double drift2 = p.mu2 - 0.5 * s2 * s2;

    Matrix obs(static_cast<Eigen::Index>(times.size()), 2);
    double lx = std::log(x0), ly = std::log(y0);
    obs(0, 0) = x0;
    obs(0, 1) = y0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double dt = times[i] - times[i - 1];
        if (!(dt > 0.0)) throw DomainError("gbm2d_simulate: times must be strictly increasing");
        const double sq = std::sqrt(dt);
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        lx += drift1 * dt + s1 * sq * z1;
        ly += drift2 * dt + s2 * sq * (p.rho * z1 + ortho * z2);
        obs(static_cast<Eigen::Index>(i), 0) = std::exp(lx);
        obs(static_cast<Eigen::Index>(i), 1) = std::exp(ly);
    }
    return Dataset(times, std::move(obs));
}

SummaryVector gbm2d_summaries(const Dataset& data) {
    check_positive(data);
    if (data.rows() < 2) throw DomainError("gbm2d_summaries: need at least 2 observations");
    const auto& obs = data.observations();
    double m1 = 0, v1 = 0, m2 = 0, v2 = 0, r1 = 0, r2 = 0;
    double prev_x = std::log(obs(0, 0)), prev_y = std::log(obs(0, 1));
    for (Eigen::Index i = 1; i < obs.rows(); ++i) {
        const double lx = std::log(obs(i, 0));
        const double ly = std::log(obs(i, 1));
        const double dx = lx - prev_x;
        const double dy = ly - prev_y;
        m1 += dx;
        v1 += dx * dx;
        m2 += dy;
        v2 += dy * dy;
        r1 += dx * dy;
        r2 += lx + ly;
        prev_x = lx;
        prev_y = ly;
    }
    Vector s(6);
    s << m1, v1, m2, v2, r1, r2;
    return SummaryVector(std::move(s));
}

double gbm1d_transition_logpdf(double mu, double sigma, double dt, double x_from, double x_to) {
    if (!(sigma > 0.0) || !(dt > 0.0) || !(x_from > 0.0) || !(x_to > 0.0))
        throw DomainError("gbm1d_transition_logpdf: invalid arguments");
    const double a = std::log(x_to) - std::log(x_from) - (mu - 0.5 * sigma * sigma) * dt;
    return -0.5 * std::log(2.0 * std::numbers::pi * dt) - std::log(sigma) - std::log(x_to) -
           a * a / (2.0 * sigma * sigma * dt);
}

double gbm2d_exact_loglik(const Gbm2dParams& p, const Dataset& data) {
    p.validate();
    check_positive(data);
    const double s1 = std::exp(p.logSigma1);
    const double s2 = std::exp(p.logSigma2);
    const double one_m_rho2 = 1.0 - p.rho * p.rho;
    const double drift1 = p.mu1 - 0.5 * s1 * s1;
    const double drift2 = p.mu2 - 0.5 * s2 * s2;
    const auto& obs = data.observations();
    const auto& t = data.times();

    long double total = 0.0L;
    for (std::size_t i = 1; i < data.rows(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double dt = t[i] - t[i - 1];
        const double a = std::log(obs(r, 0)) - std::log(obs(r - 1, 0)) - drift1 * dt;
        const double b = std::log(obs(r, 1)) - std::log(obs(r - 1, 1)) - drift2 * dt;
        const long double quad = (static_cast<long double>(a) * a / (s1 * s1) +
                                  static_cast<long double>(b) * b / (s2 * s2) -
                                  2.0L * p.rho * static_cast<long double>(a) * b / (s1 * s2)) /
                                 (2.0L * dt * one_m_rho2);
        total += -std::log(2.0 * std::numbers::pi * dt * std::sqrt(one_m_rho2) * s1 * s2 * obs(r, 0) * obs(r, 1)) - quad;
    }
    return static_cast<double>(total);
}

namespace {

// Sufficient statistics of the log-increments: drift m = sum(u) / sum(dt) and
// S = (1/n) sum (u - m dt)(u - m dt)' / dt.
struct IncrementStats {
    double n = 0, total_time = 0, mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
};

IncrementStats increment_stats(const Dataset& data) {
    const auto inc = log_increments(data);
    const auto n = inc.dt.size();
    if (n < 1) throw DomainError("gbm2d_moment_mle: need at least one increment");
    IncrementStats st;
    double sum_x = 0, sum_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        st.total_time += inc.dt[i];
        sum_x += inc.dx[i];
        sum_y += inc.dy[i];
    }
    st.n = static_cast<double>(n);
    st.mx = sum_x / st.total_time;
    st.my = sum_y / st.total_time;
    for (std::size_t i = 0; i < n; ++i) {
        const double ex = inc.dx[i] - st.mx * inc.dt[i];
        const double ey = inc.dy[i] - st.my * inc.dt[i];
        st.sxx += ex * ex / inc.dt[i];
        st.syy += ey * ey / inc.dt[i];
        st.sxy += ex * ey / inc.dt[i];
    }
    st.sxx /= st.n;
    st.syy /= st.n;
    st.sxy /= st.n;
    return st;
}

// loglik(maximum) - loglik(theta), rewritten through the statistics above so
// it is O(1) near the optimum instead of a small difference of large sums.
double exact_deviance(const Vector& x, const IncrementStats& st) {
    const double rho = x[4];
    if (!(std::abs(rho) < 1.0)) return std::numeric_limits<double>::infinity();
    const double s1 = std::exp(x[1]);
    const double s2 = std::exp(x[3]);
    const double one_m_r2 = 1.0 - rho * rho;
    const double trace = (st.sxx / (s1 * s1) + st.syy / (s2 * s2) - 2.0 * rho * st.sxy / (s1 * s2)) / one_m_r2;
    const double log_det = std::log(st.sxx * st.syy - st.sxy * st.sxy) - 2.0 * x[1] - 2.0 * x[3] - std::log(one_m_r2);
    const double b1 = st.mx - (x[0] - 0.5 * s1 * s1);
    const double b2 = st.my - (x[2] - 0.5 * s2 * s2);
    const double quad = (b1 * b1 / (s1 * s1) + b2 * b2 / (s2 * s2) - 2.0 * rho * b1 * b2 / (s1 * s2)) / one_m_r2;
    return 0.5 * st.n * (trace - log_det - 2.0) + 0.5 * st.total_time * quad;
}

Gbm2dParams moment_estimate(const IncrementStats& st) {
    const double scale = std::max(1.0, std::max(st.sxx, st.syy));
    if (!(st.sxx > 1e-14 * scale) || !(st.syy > 1e-14 * scale))
        throw OptimizationError("gbm2d MLE: zero residual variance, parameters not identifiable",
                                {st.mx, -INFINITY, st.my, -INFINITY, 0.0}, INFINITY);
    const double rho = st.sxy / std::sqrt(st.sxx * st.syy);
    const Gbm2dParams p{st.mx + 0.5 * st.sxx, 0.5 * std::log(st.sxx), st.my + 0.5 * st.syy, 0.5 * std::log(st.syy), rho};
    if (!(std::abs(rho) < 1.0 - 1e-10))
        throw OptimizationError("gbm2d MLE: singular increment covariance (|rho| = 1)",
                                {p.mu1, p.logSigma1, p.mu2, p.logSigma2, rho}, INFINITY);
    return p;
}

}  // namespace

Gbm2dParams gbm2d_moment_mle(const Dataset& data) { return moment_estimate(increment_stats(data)); }

double gbm2d_exact_deviance(const Gbm2dParams& params, const Dataset& data) {
    return exact_deviance(params.to_vector(), increment_stats(data));
}

GbmMleResult gbm2d_exact_mle(const Dataset& data, std::uint64_t seed) {
    check_positive(data);
    if (data.rows() < 2) throw DomainError("gbm2d_exact_mle: need at least 2 observations");
    GbmMleResult out;
    const IncrementStats st = increment_stats(data);
    out.moment_params = moment_estimate(st);
    out.moment_loglik = gbm2d_exact_loglik(out.moment_params, data);

    auto objective = [&st](const Vector& x) { return exact_deviance(x, st); };
    Vector step(5);
    step << 0.1, 0.05, 0.1, 0.05, 0.05;

    RandomSource rng(seed, streams::initial);
    Vector best = out.moment_params.to_vector();
    double best_value = objective(best);
    bool any_converged = false;
    constexpr int n_starts = 5;
    for (int s = 0; s < n_starts; ++s) {
        Vector x = out.moment_params.to_vector();
        if (s > 0) {
            for (Eigen::Index i = 0; i < 5; ++i) x[i] += 2.0 * step[i] * rng.normal();
            x[4] = std::clamp(x[4], -0.95, 0.95);
        }
        // Restart the simplex from its own optimum until it stops moving.
        SimplexResult r;
        Vector local_step = step;
        for (int pass = 0; pass < 4; ++pass) {
            r = nelder_mead(objective, x, local_step, 1e-11, 50000);
            const double moved = (r.x - x).cwiseAbs().maxCoeff();
            x = r.x;
            local_step = step * 0.1;
            if (r.converged && moved < 1e-9) break;
        }
        ++out.starts;
        any_converged = any_converged || r.converged;
        if (r.value < best_value) {
            best_value = r.value;
            best = r.x;
        }
    }
    if (!any_converged || !std::isfinite(best_value))
        throw OptimizationError("gbm2d MLE: simplex did not converge from any start",
                                std::vector<double>(best.data(), best.data() + best.size()),
                                out.moment_loglik - best_value);
    out.params = Gbm2dParams::from_vector(best);
    out.loglik = gbm2d_exact_loglik(out.params, data);
    return out;
}

ModelSpec make_gbm2d_model(std::vector<double> times, double x0, double y0) {
    ModelSpec m;
    m.name = "gbm2d";
    m.names = {"mu1", "logSigma1", "mu2", "logSigma2", "rho"};
    m.log_scale = {false, true, false, true, false};
    m.prior = Prior({PriorComponent::normal(1.5, 0.5), PriorComponent::normal(-1.0, 0.5), PriorComponent::normal(1.5, 0.5),
                     PriorComponent::normal(-1.0, 0.5), PriorComponent::truncated_normal(0.5, 0.3, -1.0, 1.0)},
                    m.log_scale);
    m.simulate = [times = std::move(times), x0, y0](const Vector& theta, RandomSource& rng) {
        return gbm2d_simulate(Gbm2dParams::from_vector(theta), times, x0, y0, rng);
    };
    m.builtin_summaries = gbm2d_summaries;
    return m;
}

}  // namespace dcabc
