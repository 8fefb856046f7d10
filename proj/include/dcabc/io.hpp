#pragma once

#include "dcabc/core.hpp"
#include "dcabc/inference.hpp"
#include "dcabc/kernels.hpp"
#include "dcabc/samplers.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dcabc {

// `t,x[,y]` with a header row.
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);

nlohmann::json weights_to_json(const WeightMatrix& weights, PilotMethod method);
WeightMatrix weights_from_json(const nlohmann::json& j);

nlohmann::json vector_json(const Vector& v);
nlohmann::json matrix_json(const Matrix& m);
Vector vector_from_json(const nlohmann::json& j);

// Result document without timing so reruns are byte-identical.
nlohmann::json result_to_json(const DcResult& result, const nlohmann::json& config_echo);

nlohmann::json bootstrap_to_json(const BootstrapReport& report, const std::vector<std::string>& names,
                                 const Vector& theta_hat);
// Rows = parameters; columns = mean, p2.5, p97.5, bias, rmse.
void write_bootstrap_csv(std::ostream& out, const BootstrapReport& report, const std::vector<std::string>& names);

std::string read_text_file(const std::filesystem::path& path);
// Writes via a temporary file and rename; throws ConfigError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace dcabc
