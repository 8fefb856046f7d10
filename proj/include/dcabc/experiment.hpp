#pragma once

#include "dcabc/core.hpp"
#include "dcabc/inference.hpp"
#include "dcabc/models.hpp"
#include "dcabc/samplers.hpp"
#include "dcabc/summaries.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace dcabc {

// A resolved experiment: model, observed data and the raw JSON config. Paths
// in the config are relative to `base_dir`.
struct Experiment {
    nlohmann::json config;
    std::filesystem::path base_dir;
    std::string name;
    ModelSpec model;
    Dataset data;
    std::optional<Vector> truth;
    std::uint64_t seed = 0;
};

Experiment load_experiment(nlohmann::json config, const std::filesystem::path& base_dir);
Experiment load_experiment_file(const std::filesystem::path& path);
// Same experiment with different observed data (bootstrap replicates).
Experiment with_dataset(const Experiment& exp, Dataset data);

enum class Algorithm { abc_mcmc, static_abc_dc, dynamic_abc_dc, dc_mcmc };
Algorithm algorithm_of(const Experiment& exp);

// Summary function for the experiment: the model's own, or a linear projection
// of raw-and-squared observations.
Summarizer summarizer_for(const Experiment& exp, const std::optional<SummaryProjection>& projection);

// Fits the semi-automatic projection on prior simulations when the config asks
// for one; returns nullopt for builtin summaries.
std::optional<SummaryProjection> fit_projection(const Experiment& exp);

struct PilotOutcome {
    WeightMatrix weights;
    PilotMethod method = PilotMethod::mad;
    std::optional<SummaryProjection> projection;
    DcResult chain;
};

// K=1 ABC-MCMC with unit weights; weights from accepted summaries after burnin.
PilotOutcome run_pilot(const Experiment& exp, unsigned threads);

struct Resolved {
    WeightMatrix weights;
    std::optional<SummaryProjection> projection;
    std::optional<PilotOutcome> pilot;
};

// Projection and weights as configured (file, inline values, unit, or pilot).
Resolved resolve_inputs(const Experiment& exp, unsigned threads);

// Runs the configured sampler with already-resolved weights and projection.
DcResult run_sampler(const Experiment& exp, const Resolved& inputs, unsigned threads, TraceSink* sink = nullptr);

// Point estimate used by the bootstrap estimator: the final-slice mean.
Vector estimate_theta(const Experiment& exp, const Resolved& inputs, unsigned threads);

}  // namespace dcabc
