#include "dcabc/kernels.hpp"
#include "dcabc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dcabc {

SummaryVector::SummaryVector(Vector values) : values_(std::move(values)) {
    if (!values_.allFinite()) throw DegenerateStatisticError("SummaryVector: non-finite summary");
}

WeightMatrix::WeightMatrix(Vector diagonal) : diagonal_(std::move(diagonal)) {
    for (Eigen::Index i = 0; i < diagonal_.size(); ++i)
        if (!(diagonal_[i] > 0.0) || !std::isfinite(diagonal_[i]))
            throw DomainError("WeightMatrix: diagonal entry " + std::to_string(i) + " must be positive");
}

WeightMatrix WeightMatrix::from_scales(const Vector& omega) { return WeightMatrix(omega.array().square().matrix()); }

KernelSpec::KernelSpec(KernelKind k, double d, WeightMatrix w) : kind(k), delta(d), weights(std::move(w)) {
    if (!(delta > 0.0)) throw DomainError("KernelSpec: delta must be positive");
}

double weighted_distance_squared(const WeightMatrix& weights, const SummaryVector& s_obs, const SummaryVector& s_sim) {
    if (s_obs.size() != s_sim.size() || s_obs.size() != weights.size())
        throw DomainError("log_kernel: summary/weight dimension mismatch");
    const auto& w = weights.diagonal();
    double u = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        const double d = s_sim[j] - s_obs[j];
        u += d * d / w[j];
    }
    return u;
}

double log_kernel(const KernelSpec& spec, const SummaryVector& s_obs, const SummaryVector& s_sim) {
    const double u = weighted_distance_squared(spec.weights, s_obs, s_sim);
    switch (spec.kind) {
        case KernelKind::gaussian:
            return -u / (2.0 * spec.delta * spec.delta);
        case KernelKind::uniform:
            return u <= spec.delta * spec.delta ? 0.0 : log_zero;
    }
    return log_zero;
}

double cloned_log_kernel(const KernelSpec& spec, const SummaryVector& s_obs, std::span<const SummaryVector> s_sims) {
    if (s_sims.empty()) throw DomainError("cloned_log_kernel: no clones");
    double total = 0.0;
    for (const auto& s : s_sims) total += log_kernel(spec, s_obs, s);
    return total;
}

double median(std::vector<double> values) {
    if (values.empty()) throw DomainError("median: empty input");
    const auto n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

WeightMatrix pilot_weights(std::span<const SummaryVector> summaries, PilotMethod method, std::size_t burnin) {
    if (summaries.size() < burnin + 2) throw DomainError("pilot_weights: need at least 2 post-burnin summaries");
    const auto kept = summaries.subspan(burnin);
    const Eigen::Index ds = kept.front().size();
    Vector diag(ds);
    std::vector<double> column(kept.size());
    for (Eigen::Index j = 0; j < ds; ++j) {
        for (std::size_t i = 0; i < kept.size(); ++i) {
            if (kept[i].size() != ds) throw DomainError("pilot_weights: summary dimension mismatch");
            column[i] = kept[i][j];
        }
        double omega = 0.0;
        if (method == PilotMethod::mad) {
            const double m = median(column);
            std::vector<double> dev(column.size());
            std::transform(column.begin(), column.end(), dev.begin(), [m](double v) { return std::abs(v - m); });
            omega = median(std::move(dev));
        } else {
            double mean = 0.0;
            for (double v : column) mean += v;
            mean /= static_cast<double>(column.size());
            double ss = 0.0;
            for (double v : column) ss += (v - mean) * (v - mean);
            omega = std::sqrt(ss / static_cast<double>(column.size() - 1));
        }
        if (!(omega > 0.0))
            throw DegenerateStatisticError("pilot_weights: summary coordinate " + std::to_string(j) + " has zero spread",
                                           static_cast<int>(j));
        diag[j] = omega * omega;
    }
    return WeightMatrix(diag);
}

}  // namespace dcabc
