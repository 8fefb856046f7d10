#include "dcabc/errors.hpp"
#include "dcabc/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dcabc {

void GandKParams::validate() const {
    if (!(B > 0.0)) throw DomainError("g-and-k: B must be positive");
    if (!(k > -0.5)) throw DomainError("g-and-k: k must exceed -0.5");
    if (!std::isfinite(A) || !std::isfinite(g) || !std::isfinite(c)) throw DomainError("g-and-k: non-finite parameter");
}

double gandk_quantile(const GandKParams& p, double r) {
    // (1 - e^{-gr}) / (1 + e^{-gr}) == tanh(gr / 2)
    const double skew = 1.0 + p.c * std::tanh(0.5 * p.g * r);
    return p.A + p.B * skew * std::exp(p.k * std::log1p(r * r)) * r;
}

Dataset gandk_simulate(const GandKParams& params, std::size_t n, RandomSource& rng) {
    params.validate();
    if (n == 0) throw DomainError("gandk_simulate: n must be >= 1");
    std::vector<double> times(n);
    std::iota(times.begin(), times.end(), 1.0);
    Matrix obs(static_cast<Eigen::Index>(n), 1);
    for (Eigen::Index i = 0; i < obs.rows(); ++i) obs(i, 0) = gandk_quantile(params, rng.normal());
    return Dataset(std::move(times), std::move(obs));
}

double percentile_linear(std::vector<double> values, double p) {
    if (values.empty()) throw DomainError("percentile_linear: empty input");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("percentile_linear: p outside [0, 1]");
    const double h = static_cast<double>(values.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto lo_it = values.begin() + static_cast<std::ptrdiff_t>(lo);
    std::nth_element(values.begin(), lo_it, values.end());
    const double x_lo = *lo_it;
    if (lo + 1 >= values.size()) return x_lo;
    const double x_hi = *std::min_element(lo_it + 1, values.end());
    return x_lo + (h - static_cast<double>(lo)) * (x_hi - x_lo);
}

SummaryVector gandk_summaries(const Dataset& data) {
    if (data.dim() != 1) throw DomainError("gandk_summaries: scalar data expected");
    const auto n = data.rows();
    if (n < 3) throw DomainError("gandk_summaries: need at least 3 observations");
    std::vector<double> v(data.column(0).data(), data.column(0).data() + n);

    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0;
    for (double x : v) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    if (!(m2 > 0.0)) throw DegenerateStatisticError("gandk_summaries: data have zero variance");

    // Percentiles in increasing order so each selection only scans the tail.
    Vector s(5);
    auto begin = v.begin();
    const double probs[4] = {0.2, 0.4, 0.6, 0.8};
    for (int q = 0; q < 4; ++q) {
        const double h = static_cast<double>(n - 1) * probs[q];
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto lo_it = v.begin() + static_cast<std::ptrdiff_t>(lo);
        std::nth_element(begin, lo_it, v.end());
        const double x_lo = *lo_it;
        const double x_hi = lo + 1 < n ? *std::min_element(lo_it + 1, v.end()) : x_lo;
        s[q] = x_lo + (h - static_cast<double>(lo)) * (x_hi - x_lo);
        begin = lo_it;
    }
    s[4] = m3 / std::pow(m2, 1.5);
    return SummaryVector(std::move(s));
}

ModelSpec make_gandk_model(std::size_t n, double c) {
    ModelSpec m;
    m.name = "gandk";
    m.names = {"A", "B", "g", "k"};
    m.log_scale = {false, false, false, false};
    const auto u = PriorComponent::uniform(0.0, 10.0);
    m.prior = Prior({u, u, u, u}, m.log_scale);
    m.simulate = [n, c](const Vector& theta, RandomSource& rng) {
        return gandk_simulate(GandKParams{theta[0], theta[1], theta[2], theta[3], c}, n, rng);
    };
    m.builtin_summaries = gandk_summaries;
    return m;
}

}  // namespace dcabc
