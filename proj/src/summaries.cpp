#include "dcabc/summaries.hpp"
#include "dcabc/errors.hpp"

#include <spdlog/spdlog.h>

namespace dcabc {

SummaryVector SummaryProjection::apply(const Vector& features) const {
    if (features.size() != coefficients.cols()) throw DomainError("SummaryProjection: feature dimension mismatch");
    return SummaryVector(intercept + coefficients * features);
}

SummaryProjection semi_automatic_summaries(const Matrix& params, const Matrix& features, RidgeFallback fallback) {
    if (params.rows() != features.rows()) throw DomainError("semi_automatic_summaries: row counts differ");
    if (params.rows() == 0) throw DomainError("semi_automatic_summaries: empty pilot");
    const Eigen::Index n = features.rows();
    const Eigen::Index p = features.cols();

    Matrix design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = features;

    SummaryProjection out;
    Matrix beta;
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() == p + 1) {
        beta = qr.solve(params);
    } else {
        if (fallback == RidgeFallback::disabled)
            throw RegressionError("semi_automatic_summaries: feature matrix is rank deficient (rank " +
                                  std::to_string(qr.rank()) + " < " + std::to_string(p + 1) + ")");
        spdlog::warn("semi_automatic_summaries: rank-deficient features, using ridge lambda=1e-8");
        Matrix normal = design.transpose() * design;
        normal.diagonal().array() += 1e-8;
        beta = normal.ldlt().solve(design.transpose() * params);
        out.ridge_used = true;
    }
    out.intercept = beta.row(0).transpose();
    out.coefficients = beta.bottomRows(p).transpose();
    return out;
}

Vector raw_and_squared_features(const Dataset& data) {
    if (data.dim() != 1) throw DomainError("raw_and_squared_features: scalar dataset expected");
    const auto n = static_cast<Eigen::Index>(data.rows());
    Vector f(2 * n);
    f.head(n) = data.column(0);
    f.tail(n) = data.column(0).array().square();
    return f;
}

void to_json(nlohmann::json& j, const SummaryProjection& p) {
    std::vector<std::vector<double>> coef(static_cast<std::size_t>(p.coefficients.rows()),
                                          std::vector<double>(static_cast<std::size_t>(p.coefficients.cols())));
    for (Eigen::Index r = 0; r < p.coefficients.rows(); ++r)
        for (Eigen::Index c = 0; c < p.coefficients.cols(); ++c)
            coef[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = p.coefficients(r, c);
    j = nlohmann::json{{"intercept", std::vector<double>(p.intercept.data(), p.intercept.data() + p.intercept.size())},
                       {"coefficients", coef},
                       {"ridge_used", p.ridge_used}};
}

void from_json(const nlohmann::json& j, SummaryProjection& p) {
    const auto icpt = j.at("intercept").get<std::vector<double>>();
    const auto coef = j.at("coefficients").get<std::vector<std::vector<double>>>();
    if (coef.size() != icpt.size()) throw ConfigError("projection: intercept/coefficient rows differ");
    p.intercept = Eigen::Map<const Vector>(icpt.data(), static_cast<Eigen::Index>(icpt.size()));
    const auto cols = coef.empty() ? 0 : coef.front().size();
    p.coefficients.resize(static_cast<Eigen::Index>(coef.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < coef.size(); ++r) {
        if (coef[r].size() != cols) throw ConfigError("projection: ragged coefficient matrix");
        for (std::size_t c = 0; c < cols; ++c)
            p.coefficients(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = coef[r][c];
    }
    p.ridge_used = j.value("ridge_used", false);
}

}  // namespace dcabc
