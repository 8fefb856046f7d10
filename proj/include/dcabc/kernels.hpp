#pragma once

#include "dcabc/core.hpp"

#include <limits>
#include <span>
#include <vector>

namespace dcabc {

// Summary statistic S(.) of a dataset; always finite.
class SummaryVector {
public:
    SummaryVector() = default;
    explicit SummaryVector(Vector values);

    Eigen::Index size() const noexcept { return values_.size(); }
    const Vector& values() const noexcept { return values_; }
    double operator[](Eigen::Index i) const { return values_[i]; }

private:
    Vector values_;
};

// Diagonal Omega = diag(omega_1^2, ..., omega_ds^2); the kernel applies Omega^{-1}.
class WeightMatrix {
public:
    WeightMatrix() = default;
    explicit WeightMatrix(Vector diagonal);
    static WeightMatrix unit(Eigen::Index dim) { return WeightMatrix(Vector::Ones(dim)); }
    // Builds Omega from per-coordinate scales omega_j (squares them).
    static WeightMatrix from_scales(const Vector& omega);

    Eigen::Index size() const noexcept { return diagonal_.size(); }
    const Vector& diagonal() const noexcept { return diagonal_; }
    Vector scales() const { return diagonal_.cwiseSqrt(); }

private:
    Vector diagonal_;
};

enum class KernelKind { gaussian, uniform };

struct KernelSpec {
    KernelKind kind = KernelKind::gaussian;
    double delta = 1.0;
    WeightMatrix weights;

    KernelSpec(KernelKind kind, double delta, WeightMatrix weights);
};

inline constexpr double log_zero = -std::numeric_limits<double>::infinity();

// D' Omega^{-1} D with D = s_sim - s_obs.
double weighted_distance_squared(const WeightMatrix& weights, const SummaryVector& s_obs, const SummaryVector& s_sim);

// Log of the unnormalised kernel J_delta. Gaussian: -D'Omega^{-1}D / (2 delta^2).
// Uniform: 0 inside the weighted ball of radius delta, log_zero outside.
double log_kernel(const KernelSpec& spec, const SummaryVector& s_obs, const SummaryVector& s_sim);

// Sum of per-clone log kernels, i.e. log of prod_k J_delta(y, z^(k)).
double cloned_log_kernel(const KernelSpec& spec, const SummaryVector& s_obs, std::span<const SummaryVector> s_sims);

enum class PilotMethod { mad, sd };

// Per-coordinate spread of pilot summaries after dropping `burnin` leading
// entries. Returns Omega with omega_j^2 on the diagonal.
WeightMatrix pilot_weights(std::span<const SummaryVector> summaries, PilotMethod method, std::size_t burnin);

// Median of a copy of the data (average of the two middle values for even n).
double median(std::vector<double> values);

}  // namespace dcabc
