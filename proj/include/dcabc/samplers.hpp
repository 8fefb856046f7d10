#pragma once

#include "dcabc/core.hpp"
#include "dcabc/inference.hpp"
#include "dcabc/kernels.hpp"
#include "dcabc/models.hpp"
#include "dcabc/proposals.hpp"
#include "dcabc/random.hpp"

#include <cstdint>
#include <iosfwd>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dcabc {

// Everything an ABC chain needs besides its schedules.
struct AbcProblem {
    const ModelSpec* model = nullptr;
    Summarizer summarize;  // the model's builtin summaries or a projection
    SummaryVector observed;
    KernelKind kernel = KernelKind::gaussian;
    WeightMatrix weights;
};

// Receives every trace row as it is produced.
class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void on_row(const TraceRow& row) = 0;
    virtual void finish() {}
};

// Streams the trace CSV, flushing every `flush_every` rows and keeping every
// `thin`-th row.
class TraceCsvWriter : public TraceSink {
public:
    TraceCsvWriter(std::ostream& out, std::size_t dim, long flush_every = 1000, long thin = 1);
    void on_row(const TraceRow& row) override;
    void finish() override;

private:
    std::ostream& out_;
    long flush_every_;
    long thin_;
    long pending_ = 0;
};

struct ChainOptions {
    std::optional<Vector> initial_theta;  // prior draw when empty
    long adapt_interval = 1000;
    double burnin_fraction = 0.1;
    long stagnation_window = 5000;
    unsigned threads = 1;
    // Adds the random-walk proposal log ratio to log alpha. It is identically
    // zero; the switch exists so tests can confirm that.
    bool include_rw_proposal_ratio = false;
    TraceSink* sink = nullptr;
    // Called with every successfully simulated proposal (all K clones), accepted or not.
    std::function<void(long iteration, const std::vector<SummaryVector>& clones)> on_proposal;
};

struct AbcDcConfig {
    DeltaSchedule delta_schedule;
    CloneSchedule clone_schedule;
    long total_iterations = 0;
    double burnin_fraction = 0.1;
    long adapt_interval = 1000;
    bool use_regression_adjustment = false;
    CenterRule center_rule = CenterRule::mean;
    // Begin the K > 1 stage at the independence sampler's centre instead of the
    // last accepted K = 1 state.
    bool start_cloning_at_center = false;
    std::uint64_t master_seed = 0;

    // Throws ConfigError unless K stays 1 until the final delta is active.
    void validate() const;
};

// Running maximum of log q# + log prior(theta#) over proposals.
struct ModeTracker {
    double best_log_posterior_kernel = log_zero;
    Vector best_theta;
    long updates = 0;

    bool empty() const { return best_theta.size() == 0; }
    // Returns true when the candidate becomes the new maximum.
    bool offer(double log_posterior_kernel, const Vector& theta);
};

struct DcResult {
    ChainTrace trace;
    ParameterVector final_slice_mean;
    Matrix final_slice_covariance;
    Matrix asymptotic_mle_covariance;  // final K x final_slice_covariance
    std::pair<long, long> final_slice{0, 0};
    int final_clones = 1;
    double final_delta = 0.0;
    ModeTracker mode;
    std::optional<AdjustmentResult> adjustment;
    std::optional<Matrix> independence_covariance;  // last Sigma_k used by the independence sampler
    long failed_simulations = 0;
    bool stagnated = false;
    std::vector<std::string> warnings;

    std::vector<double> acceptance_rates() const;
};

// Adaptive random-walk ABC-MCMC along a threshold schedule (K = 1).
DcResult abc_mcmc(const AbcProblem& problem, const DeltaSchedule& deltas, long iterations, const RandomSource& rng,
                  const ChainOptions& options = {});

// Fixed (delta, K) ABC chain with the adaptive random walk.
DcResult static_abc_dc(const AbcProblem& problem, double delta, int clones, long iterations,
                       const RandomSource& rng, const ChainOptions& options = {});

// Random walk while K = 1, then an independence sampler centred at the
// tracked mode with K following the clone schedule.
DcResult dynamic_abc_dc(const AbcProblem& problem, const AbcDcConfig& config, const RandomSource& rng,
                        const ChainOptions& options = {});

// Data-cloning MCMC for a model with an evaluable measurement density:
// q = sum over K latent paths of log f(y | X^(k), theta).
DcResult dc_mcmc(const ModelSpec& model, const Dataset& observed, int clones, long iterations,
                 const AdaptiveRWState& proposal, const RandomSource& rng, const ChainOptions& options = {});

}  // namespace dcabc
