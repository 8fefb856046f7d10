#pragma once

#include "dcabc/core.hpp"
#include "dcabc/kernels.hpp"

#include <nlohmann/json.hpp>

namespace dcabc {

// Linear map from a dataset feature vector to one summary per parameter:
// S = intercept + coefficients * features.
struct SummaryProjection {
    Vector intercept;     // d
    Matrix coefficients;  // d x p
    // True when the ridge fallback had to be used during fitting.
    bool ridge_used = false;

    Eigen::Index summary_dim() const { return intercept.size(); }
    Eigen::Index feature_dim() const { return coefficients.cols(); }
    SummaryVector apply(const Vector& features) const;
};

enum class RidgeFallback { enabled, disabled };

// Ordinary least squares of each parameter coordinate on the features (with
// intercept). Rank-deficient designs raise RegressionError unless the ridge
// fallback (lambda = 1e-8 on the normal equations) is enabled.
SummaryProjection semi_automatic_summaries(const Matrix& pilot_params, const Matrix& pilot_features,
                                           RidgeFallback fallback = RidgeFallback::enabled);

// Observations of a scalar dataset followed by their element-wise squares.
Vector raw_and_squared_features(const Dataset& data);

void to_json(nlohmann::json& j, const SummaryProjection& p);
void from_json(const nlohmann::json& j, SummaryProjection& p);

}  // namespace dcabc
