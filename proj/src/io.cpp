#include "dcabc/io.hpp"
#include "dcabc/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dcabc {
namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() && s.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(line) + ": cannot parse '" + s + "' as a number");
    }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp);
        out << text;
        if (!out) throw ConfigError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("dataset file not found: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty dataset file");
    const auto header = split(line);
    if (header.size() < 2 || header.size() > 3 || header[0] != "t")
        throw ConfigError(path.string() + ": expected header t,x[,y]");
    const auto cols = header.size() - 1;
    std::vector<double> times;
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": wrong number of columns");
        times.push_back(parse_double(cells[0], path, lineno));
        for (std::size_t c = 1; c < cells.size(); ++c) values.push_back(parse_double(cells[c], path, lineno));
    }
    Matrix obs(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < times.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c)
            obs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * cols + c];
    try {
        return Dataset(std::move(times), std::move(obs));
    } catch (const DomainError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    out << (data.dim() == 1 ? "t,x\n" : "t,x,y\n");
    const auto& obs = data.observations();
    for (std::size_t i = 0; i < data.rows(); ++i) {
        out << fmt17(data.times()[i]);
        for (Eigen::Index c = 0; c < obs.cols(); ++c) out << ',' << fmt17(obs(static_cast<Eigen::Index>(i), c));
        out << '\n';
    }
}

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json matrix_json(const Matrix& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
    return rows;
}

Vector vector_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json weights_to_json(const WeightMatrix& weights, PilotMethod method) {
    return {{"method", method == PilotMethod::mad ? "mad" : "sd"},
            {"omega", vector_json(weights.scales())},
            {"omega_squared", vector_json(weights.diagonal())}};
}

WeightMatrix weights_from_json(const nlohmann::json& j) {
    try {
        if (j.contains("omega_squared")) return WeightMatrix(vector_from_json(j.at("omega_squared")));
        return WeightMatrix::from_scales(vector_from_json(j.at("omega")));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("weights: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("weights: ") + e.what());
    }
}

nlohmann::json result_to_json(const DcResult& result, const nlohmann::json& config_echo) {
    nlohmann::json regimes = nlohmann::json::array();
    for (const auto& r : result.trace.regimes())
        regimes.push_back({{"delta", r.delta},
                           {"K", r.clones},
                           {"first", r.first},
                           {"last", r.last},
                           {"accepted", r.accepted},
                           {"acceptance_rate", r.acceptance_rate()}});
    nlohmann::json out;
    out["config"] = config_echo;
    out["parameters"] = result.final_slice_mean.names();
    out["theta_hat"] = vector_json(result.final_slice_mean.values());
    out["covariance"] = matrix_json(result.final_slice_covariance);
    out["asymptotic_covariance"] = matrix_json(result.asymptotic_mle_covariance);
    out["final_slice"] = {{"first", result.final_slice.first},
                          {"last", result.final_slice.second},
                          {"delta", result.final_delta},
                          {"K", result.final_clones}};
    out["regimes"] = regimes;
    out["mode_tracker"] = {{"best_log_posterior_kernel", result.mode.empty() ? nlohmann::json(nullptr)
                                                                             : nlohmann::json(result.mode.best_log_posterior_kernel)},
                           {"theta_tilde", result.mode.empty() ? nlohmann::json(nullptr) : vector_json(result.mode.best_theta)},
                           {"updates", result.mode.updates}};
    if (result.adjustment) {
        out["regression_adjustment"] = {{"center", vector_json(result.adjustment->center)},
                                        {"covariance", matrix_json(result.adjustment->covariance)},
                                        {"beta_hat", matrix_json(result.adjustment->beta_hat)},
                                        {"ridge_used", result.adjustment->ridge_used}};
    }
    out["failed_simulations"] = result.failed_simulations;
    out["stagnated"] = result.stagnated;
    out["warnings"] = result.warnings;
    return out;
}

nlohmann::json bootstrap_to_json(const BootstrapReport& report, const std::vector<std::string>& names,
                                 const Vector& theta_hat) {
    return {{"parameters", names},
            {"theta_hat", vector_json(theta_hat)},
            {"requested", report.requested},
            {"missing", report.missing},
            {"means", vector_json(report.means)},
            {"percentile_2_5", vector_json(report.percentile_2_5)},
            {"percentile_97_5", vector_json(report.percentile_97_5)},
            {"bias", vector_json(report.bias)},
            {"rmse", vector_json(report.rmse)},
            {"replicate_estimates", matrix_json(report.replicate_estimates)},
            {"warnings", report.warnings}};
}

void write_bootstrap_csv(std::ostream& out, const BootstrapReport& report, const std::vector<std::string>& names) {
    out << "parameter,mean,p2.5,p97.5,bias,rmse\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        out << names[i] << ',' << fmt17(report.means[c]) << ',' << fmt17(report.percentile_2_5[c]) << ','
            << fmt17(report.percentile_97_5[c]) << ',' << fmt17(report.bias[c]) << ',' << fmt17(report.rmse[c]) << '\n';
    }
}

}  // namespace dcabc
