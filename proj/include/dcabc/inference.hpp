#pragma once

#include "dcabc/core.hpp"
#include "dcabc/kernels.hpp"
#include "dcabc/random.hpp"
#include "dcabc/summaries.hpp"

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dcabc {

enum class CenterRule { mean, mode };

struct AdjustmentResult {
    Matrix adjusted_draws;  // theta*_i, one row per input draw
    Matrix beta_hat;        // d_s x d
    Vector alpha_hat;       // d
    Vector center;          // mean or per-coordinate mode of adjusted draws
    Matrix covariance;      // sample covariance of adjusted draws
    bool ridge_used = false;
};

// Local-linear (Beaumont) adjustment. For each parameter coordinate fits
// theta_i = alpha + (S_i - S)' beta by weighted least squares with weights
// J_delta(S, S_i), then returns theta*_i = theta_i - (S_i - S)' beta_hat.
// `sims` holds one simulated summary per row.
AdjustmentResult regression_adjust(const Matrix& draws, const Matrix& sims, const SummaryVector& s_obs,
                                   const KernelSpec& kernel, CenterRule center_rule = CenterRule::mean,
                                   RidgeFallback fallback = RidgeFallback::enabled);

// Peak of a Freedman-Diaconis histogram (bin midpoint). Falls back to the
// median when the interquartile range is zero.
double histogram_mode(const Vector& values);

// Largest eigenvalue of the sample covariance for each K, ordered by K.
std::vector<std::pair<int, double>> eigenvalue_decay(const std::map<int, Matrix>& draws_by_k);

// sqrt(K * diag(covariance)).
Vector asymptotic_se(const Matrix& covariance, int clones);

struct BootstrapReport {
    Matrix replicate_estimates;  // successful replicates only, B_ok x d
    Vector means;
    Vector percentile_2_5;
    Vector percentile_97_5;
    Vector bias;  // means - theta_hat
    Vector rmse;  // sqrt(mean((estimate - theta_hat)^2))
    int requested = 0;
    int missing = 0;
    std::vector<std::string> warnings;
};

// Simulates a dataset at theta for replicate b.
using ReplicateSimulator = std::function<Dataset(const Vector& theta, RandomSource& rng)>;
// Re-estimates theta from a replicate dataset; `rng` is the replicate's own stream.
using ReplicateEstimator = std::function<Vector(const Dataset& data, RandomSource& rng)>;

// Replicates are independent: replicate b draws its data from
// rng.derive({bootstrap, b, 0}) and hands rng.derive({bootstrap, b, 1}) to the
// estimator, so the report does not depend on `threads`.
BootstrapReport parametric_bootstrap(const ReplicateSimulator& simulate, const ReplicateEstimator& estimate,
                                     const Vector& theta_hat, int replicates, const RandomSource& rng,
                                     unsigned threads = 1);

}  // namespace dcabc
