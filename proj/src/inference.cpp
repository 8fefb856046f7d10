#include "dcabc/inference.hpp"
#include "dcabc/errors.hpp"
#include "dcabc/models.hpp"

#include <spdlog/spdlog.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <cmath>
#include <optional>

namespace dcabc {

AdjustmentResult regression_adjust(const Matrix& draws, const Matrix& sims, const SummaryVector& s_obs,
                                   const KernelSpec& kernel, CenterRule center_rule, RidgeFallback fallback) {
    const Eigen::Index n = draws.rows();
    const Eigen::Index ds = sims.cols();
    if (sims.rows() != n) throw DomainError("regression_adjust: draws and summaries differ in row count");
    if (ds != s_obs.size()) throw DomainError("regression_adjust: summary dimension mismatch");
    if (n < ds + 2) throw DomainError("regression_adjust: need at least d_s + 2 draws");

    Vector logw(n);
    for (Eigen::Index i = 0; i < n; ++i) logw[i] = log_kernel(kernel, s_obs, SummaryVector(sims.row(i).transpose()));
    const double top = logw.maxCoeff();
    if (top == log_zero) throw RegressionError("regression_adjust: every draw has zero kernel weight");
    // Rescaling all weights by a constant leaves the WLS solution unchanged.
    const Vector sqrt_w = (0.5 * (logw.array() - top)).exp().matrix();

    Matrix centred = sims.rowwise() - s_obs.values().transpose();
    Matrix z(n, ds + 1);
    z.col(0).setOnes();
    z.rightCols(ds) = centred;
    const Matrix zw = sqrt_w.asDiagonal() * z;
    const Matrix yw = sqrt_w.asDiagonal() * draws;

    AdjustmentResult out;
    Matrix coef;
    Eigen::ColPivHouseholderQR<Matrix> qr(zw);
    if (qr.rank() == ds + 1) {
        coef = qr.solve(yw);
    } else {
        if (fallback == RidgeFallback::disabled)
            throw RegressionError("regression_adjust: Z'WZ is singular (rank " + std::to_string(qr.rank()) + ")");
        spdlog::warn("regression_adjust: singular Z'WZ, using ridge lambda=1e-8");
        Matrix normal = zw.transpose() * zw;
        normal.diagonal().array() += 1e-8;
        coef = normal.ldlt().solve(zw.transpose() * yw);
        out.ridge_used = true;
    }
    out.alpha_hat = coef.row(0).transpose();
    out.beta_hat = coef.bottomRows(ds);
    out.adjusted_draws = draws - centred * out.beta_hat;
    if (center_rule == CenterRule::mean) {
        out.center = sample_mean(out.adjusted_draws);
    } else {
        out.center.resize(draws.cols());
        for (Eigen::Index c = 0; c < draws.cols(); ++c) out.center[c] = histogram_mode(out.adjusted_draws.col(c));
    }
    out.covariance = sample_covariance(out.adjusted_draws);
    return out;
}

double histogram_mode(const Vector& values) {
    if (values.size() == 0) throw DomainError("histogram_mode: empty input");
    std::vector<double> v(values.data(), values.data() + values.size());
    const double iqr = percentile_linear(v, 0.75) - percentile_linear(v, 0.25);
    const double lo = values.minCoeff();
    const double hi = values.maxCoeff();
    if (!(iqr > 0.0) || !(hi > lo)) return median(std::move(v));

    const double width = 2.0 * iqr / std::cbrt(static_cast<double>(values.size()));
    const auto bins = static_cast<std::size_t>(std::clamp(std::ceil((hi - lo) / width), 1.0, 1e6));
    std::vector<long> counts(bins, 0);
    for (double x : v) {
        auto b = static_cast<std::size_t>((x - lo) / width);
        ++counts[std::min(b, bins - 1)];
    }
    const auto peak = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    return lo + (static_cast<double>(peak) + 0.5) * width;
}

std::vector<std::pair<int, double>> eigenvalue_decay(const std::map<int, Matrix>& draws_by_k) {
    std::vector<std::pair<int, double>> out;
    for (const auto& [k, draws] : draws_by_k) {
        if (draws.rows() < 2) throw DomainError("eigenvalue_decay: need at least 2 draws for K=" + std::to_string(k));
        Eigen::SelfAdjointEigenSolver<Matrix> eig(sample_covariance(draws), Eigen::EigenvaluesOnly);
        out.emplace_back(k, eig.eigenvalues().maxCoeff());
    }
    return out;
}

Vector asymptotic_se(const Matrix& covariance, int clones) {
    if (clones < 1) throw DomainError("asymptotic_se: K must be >= 1");
    if (covariance.rows() != covariance.cols()) throw DomainError("asymptotic_se: covariance must be square");
    const Vector diag = covariance.diagonal();
    if ((diag.array() < 0.0).any()) throw NumericalError("asymptotic_se: negative variance on the diagonal");
    return (static_cast<double>(clones) * diag.array()).sqrt().matrix();
}

BootstrapReport parametric_bootstrap(const ReplicateSimulator& simulate, const ReplicateEstimator& estimate,
                                     const Vector& theta_hat, int replicates, const RandomSource& rng,
                                     unsigned threads) {
    if (replicates < 2) throw DomainError("parametric_bootstrap: need B >= 2");
    const auto b_count = static_cast<std::size_t>(replicates);
    std::vector<std::optional<Vector>> results(b_count);
    std::vector<std::string> errors(b_count);

    auto run_one = [&](std::size_t b) {
        try {
            RandomSource data_rng = rng.derive({streams::bootstrap, b, 0});
            RandomSource fit_rng = rng.derive({streams::bootstrap, b, 1});
            const Dataset data = simulate(theta_hat, data_rng);
            Vector est = estimate(data, fit_rng);
            if (est.size() != theta_hat.size() || !est.allFinite())
                throw NumericalError("estimator returned an invalid estimate");
            results[b] = std::move(est);
        } catch (const std::exception& e) {
            errors[b] = e.what();
        }
    };
    if (threads <= 1) {
        for (std::size_t b = 0; b < b_count; ++b) run_one(b);
    } else {
        tbb::task_arena arena(static_cast<int>(threads));
        arena.execute([&] { tbb::parallel_for(std::size_t{0}, b_count, run_one); });
    }

    BootstrapReport report;
    report.requested = replicates;
    std::vector<Vector> ok;
    for (std::size_t b = 0; b < b_count; ++b) {
        if (results[b]) {
            ok.push_back(*results[b]);
        } else {
            ++report.missing;
            report.warnings.push_back("replicate " + std::to_string(b) + " failed: " + errors[b]);
            spdlog::warn("bootstrap replicate {} failed: {}", b, errors[b]);
        }
    }
    if (5 * report.missing > replicates || ok.size() < 2)
        throw BootstrapError("parametric_bootstrap: " + std::to_string(report.missing) + " of " +
                             std::to_string(replicates) + " replicates failed");

    const Eigen::Index d = theta_hat.size();
    report.replicate_estimates.resize(static_cast<Eigen::Index>(ok.size()), d);
    for (std::size_t i = 0; i < ok.size(); ++i) report.replicate_estimates.row(static_cast<Eigen::Index>(i)) = ok[i];
    report.means = sample_mean(report.replicate_estimates);
    report.bias = report.means - theta_hat;
    report.rmse = (report.replicate_estimates.rowwise() - theta_hat.transpose())
                      .array()
                      .square()
                      .colwise()
                      .mean()
                      .sqrt()
                      .transpose();
    report.percentile_2_5.resize(d);
    report.percentile_97_5.resize(d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const Vector col = report.replicate_estimates.col(c);
        std::vector<double> v(col.data(), col.data() + col.size());
        report.percentile_2_5[c] = percentile_linear(v, 0.025);
        report.percentile_97_5[c] = percentile_linear(v, 0.975);
        if (report.means[c] < report.percentile_2_5[c] || report.means[c] > report.percentile_97_5[c]) {
            report.warnings.push_back("coordinate " + std::to_string(c) + ": mean outside the 2.5-97.5% interval");
            spdlog::warn("bootstrap: mean of coordinate {} lies outside its percentile interval", c);
        }
    }
    return report;
}

}  // namespace dcabc
