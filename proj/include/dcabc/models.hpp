#pragma once

#include "dcabc/core.hpp"
#include "dcabc/kernels.hpp"
#include "dcabc/random.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dcabc {

// ---------------------------------------------------------------------------
// Priors
// ---------------------------------------------------------------------------

enum class PriorKind { uniform, normal, truncated_normal, log_normal };

// Prior for one inference coordinate. Densities are densities of the
// coordinate itself, with one exception: log_normal(a, b) describes the
// natural-scale parameter, so on a log-scale coordinate it is N(a, b^2).
struct PriorComponent {
    PriorKind kind = PriorKind::uniform;
    double a = 0.0;  // lower bound, or mean / meanlog
    double b = 1.0;  // upper bound, or sd / sdlog
    double lower = 0.0;
    double upper = 0.0;

    static PriorComponent uniform(double lo, double hi);
    static PriorComponent normal(double mean, double sd);
    static PriorComponent truncated_normal(double mean, double sd, double lo, double hi);
    static PriorComponent log_normal(double meanlog, double sdlog);

    double log_density(double x, bool log_scale_coordinate) const;
    double sample(RandomSource& rng, bool log_scale_coordinate) const;
};

class Prior {
public:
    Prior() = default;
    Prior(std::vector<PriorComponent> components, std::vector<bool> log_scale);

    std::size_t size() const noexcept { return components_.size(); }
    const std::vector<PriorComponent>& components() const noexcept { return components_; }
    // Sum of component log densities; log_zero outside the support.
    double log_density(const Vector& theta) const;
    Vector sample(RandomSource& rng) const;

private:
    std::vector<PriorComponent> components_;
    std::vector<bool> log_scale_;
};

// ---------------------------------------------------------------------------
// Model contract
// ---------------------------------------------------------------------------

using Simulator = std::function<Dataset(const Vector& theta, RandomSource& rng)>;
using Summarizer = std::function<SummaryVector(const Dataset& data)>;
using LatentSimulator = std::function<Vector(const Vector& theta, RandomSource& rng)>;
using MeasurementLogDensity = std::function<double(const Dataset& y, const Vector& latent, const Vector& theta)>;

struct ModelSpec {
    std::string name;
    std::vector<std::string> names;
    std::vector<bool> log_scale;
    Prior prior;
    Simulator simulate;
    Summarizer builtin_summaries;                  // empty when summaries come from a projection
    LatentSimulator simulate_latent;               // set only for tractable measurement models
    MeasurementLogDensity measurement_log_density;  // idem

    Eigen::Index dim() const { return static_cast<Eigen::Index>(names.size()); }
    ParameterVector parameters(const Vector& values) const { return ParameterVector(values, names, log_scale); }
};

// ---------------------------------------------------------------------------
// g-and-k distribution
// ---------------------------------------------------------------------------

struct GandKParams {
    double A = 3.0;
    double B = 1.0;
    double g = 2.0;
    double k = 0.5;
    double c = 0.8;

    void validate() const;
};

// A + B [1 + c (1 - e^{-g r}) / (1 + e^{-g r})] (1 + r^2)^k r
double gandk_quantile(const GandKParams& params, double r);
Dataset gandk_simulate(const GandKParams& params, std::size_t n, RandomSource& rng);
// (P20, P40, P60, P80, skewness); percentiles by linear interpolation between
// order statistics (h = (n-1) p), skewness m3 / m2^{3/2} with 1/n moments.
SummaryVector gandk_summaries(const Dataset& data);
// Linear-interpolation percentile of unsorted data, p in [0, 1].
double percentile_linear(std::vector<double> values, double p);

// theta = (A, B, g, k); U(0, 10) priors; c fixed.
ModelSpec make_gandk_model(std::size_t n, double c = 0.8);

// ---------------------------------------------------------------------------
// Stochastic Gompertz state-space model
// ---------------------------------------------------------------------------

struct GompertzParams {
    double logA = 8.01;
    double logC = 2.639;
    double logSigma = 0.0;
    double logSigmaEps = -1.609;

    // B = log(A / X_0).
    double B(double x0) const;
};

// Exact simulation of log X on `times` (times[0] == 0) plus Gaussian noise.
Dataset gompertz_simulate(const GompertzParams& params, const std::vector<double>& times, double x0,
                          RandomSource& rng);
// log X_t at `times` without measurement noise.
Vector gompertz_latent(const GompertzParams& params, const std::vector<double>& times, double x0, RandomSource& rng);
// Sum of N(y_i; latent_i, sigma_eps^2) log densities.
double gompertz_measurement_log_density(const Dataset& y, const Vector& latent, double sigma_eps);
// Euler-Maruyama path of X on `times` with `substeps` steps per interval; not
// used by the shipped experiments (exact simulation is available).
Vector gompertz_euler_latent(const GompertzParams& params, const std::vector<double>& times, double x0,
                             int substeps, RandomSource& rng);

// theta = (log A, log C, log sigma); sigma_eps and X_0 known.
ModelSpec make_gompertz_model(std::vector<double> times, double x0, double sigma_eps);

// Observation times 0..n mapped to [0, 1].
std::vector<double> normalized_times(std::size_t n);

// ---------------------------------------------------------------------------
// Two-dimensional correlated geometric Brownian motion
// ---------------------------------------------------------------------------

struct Gbm2dParams {
    double mu1 = 1.7;
    double logSigma1 = -0.8;
    double mu2 = 1.3;
    double logSigma2 = -1.2;
    double rho = 0.3;

    void validate() const;
    Vector to_vector() const;
    static Gbm2dParams from_vector(const Vector& theta);
};

Dataset gbm2d_simulate(const Gbm2dParams& params, const std::vector<double>& times, double x0, double y0,
                       RandomSource& rng);
// (M1, V1, M2, V2, R1, R2).
SummaryVector gbm2d_summaries(const Dataset& data);
// Log transition density of a single geometric Brownian motion.
double gbm1d_transition_logpdf(double mu, double sigma, double dt, double x_from, double x_to);
// Exact log likelihood: sum of bivariate log-normal transition log densities.
double gbm2d_exact_loglik(const Gbm2dParams& params, const Dataset& data);

struct GbmMleResult {
    Gbm2dParams params;
    double loglik = 0.0;
    // Closed-form estimate from the mean/covariance of log increments.
    Gbm2dParams moment_params;
    double moment_loglik = 0.0;
    int starts = 0;
};

// Closed-form maximiser; throws OptimizationError when the increments are degenerate.
Gbm2dParams gbm2d_moment_mle(const Dataset& data);
// Simplex maximisation from the closed form plus 4 jittered starts.
// max loglik - loglik(params), computed from the increment statistics. This is
// what the simplex minimizes.
double gbm2d_exact_deviance(const Gbm2dParams& params, const Dataset& data);
GbmMleResult gbm2d_exact_mle(const Dataset& data, std::uint64_t seed = 0);

// theta = (mu1, log sigma1, mu2, log sigma2, rho).
ModelSpec make_gbm2d_model(std::vector<double> times, double x0, double y0);

}  // namespace dcabc
