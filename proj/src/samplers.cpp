#include "dcabc/samplers.hpp"
#include "dcabc/errors.hpp"

#include <spdlog/spdlog.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <cmath>
#include <memory>
#include <ostream>

namespace dcabc {

TraceCsvWriter::TraceCsvWriter(std::ostream& out, std::size_t dim, long flush_every, long thin)
    : out_(out), flush_every_(std::max(1L, flush_every)), thin_(std::max(1L, thin)) {
    write_trace_header(out_, dim);
}

void TraceCsvWriter::on_row(const TraceRow& row) {
    if ((row.iteration - 1) % thin_ != 0) return;
    write_trace_row(out_, row);
    if (++pending_ >= flush_every_) {
        out_.flush();
        pending_ = 0;
    }
}

void TraceCsvWriter::finish() { out_.flush(); }

void AbcDcConfig::validate() const {
    if (total_iterations < 1) throw ConfigError("AbcDcConfig: total_iterations must be >= 1");
    if (!(burnin_fraction >= 0.0 && burnin_fraction < 1.0)) throw ConfigError("AbcDcConfig: burnin_fraction outside [0, 1)");
    if (adapt_interval < 1) throw ConfigError("AbcDcConfig: adapt_interval must be >= 1");
    if (delta_schedule.breakpoints().empty() || clone_schedule.breakpoints().empty())
        throw ConfigError("AbcDcConfig: schedules must be non-empty");
    const auto& kb = clone_schedule.breakpoints();
    if (kb.size() > 1 && kb[1].first < delta_schedule.final_start())
        throw ConfigError("AbcDcConfig: K may only grow once the final delta is active (K increases at iteration " +
                          std::to_string(kb[1].first) + ", final delta starts at " +
                          std::to_string(delta_schedule.final_start()) + ")");
}

bool ModeTracker::offer(double value, const Vector& theta) {
    if (!(value > best_log_posterior_kernel)) return false;
    best_log_posterior_kernel = value;
    best_theta = theta;
    ++updates;
    return true;
}

std::vector<double> DcResult::acceptance_rates() const {
    std::vector<double> out;
    for (const auto& r : trace.regimes()) out.push_back(r.acceptance_rate());
    return out;
}

namespace {

enum class ProposalMode { random_walk, dynamic };

struct EngineSpec {
    std::vector<std::pair<long, double>> deltas;
    std::vector<std::pair<long, int>> clones;
    long iterations = 0;
    ProposalMode mode = ProposalMode::random_walk;
    bool regression_adjustment = false;
    CenterRule center_rule = CenterRule::mean;
    bool start_at_center = false;
};

template <class T>
T lookup(const std::vector<std::pair<long, T>>& breaks, long iteration) {
    T value = breaks.front().second;
    for (const auto& [start, v] : breaks) {
        if (start > iteration) break;
        value = v;
    }
    return value;
}

bool recoverable(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const DomainError&) {
        return true;
    } catch (const DegenerateStatisticError&) {
        return true;
    } catch (const NumericalError&) {
        return true;
    } catch (...) {
        return false;
    }
}

// Simulates K clones under one theta, each on the substream (tag, j, k).
class CloneRunner {
public:
    CloneRunner(const AbcProblem& problem, unsigned threads) : problem_(problem) {
        if (threads > 1) arena_ = std::make_unique<tbb::task_arena>(static_cast<int>(threads));
    }

    // False when any clone failed to simulate or summarise.
    bool run(const Vector& theta, const RandomSource& root, std::uint64_t tag, long j, int clones,
             std::vector<SummaryVector>& out) {
        const auto k_count = static_cast<std::size_t>(clones);
        out.assign(k_count, SummaryVector());
        std::vector<std::exception_ptr> errors(k_count);
        auto one = [&](std::size_t k) {
            try {
                RandomSource rng = root.derive({tag, static_cast<std::uint64_t>(j), k});
                out[k] = problem_.summarize(problem_.model->simulate(theta, rng));
            } catch (...) {
                errors[k] = std::current_exception();
            }
        };
        if (arena_ && k_count > 1) {
            arena_->execute([&] { tbb::parallel_for(std::size_t{0}, k_count, one); });
        } else {
            for (std::size_t k = 0; k < k_count; ++k) one(k);
        }
        bool ok = true;
        for (const auto& e : errors) {
            if (!e) continue;
            if (!recoverable(e)) std::rethrow_exception(e);
            ok = false;
        }
        if (!ok) ++failures;
        return ok;
    }

    long failures = 0;

private:
    const AbcProblem& problem_;
    std::unique_ptr<tbb::task_arena> arena_;
};

double total_log_kernel(const AbcProblem& problem, double delta, const std::vector<SummaryVector>& sums) {
    const KernelSpec spec(problem.kernel, delta, problem.weights);
    return cloned_log_kernel(spec, problem.observed, sums);
}

Vector mean_summary(const std::vector<SummaryVector>& sums) {
    Vector m = Vector::Zero(sums.front().size());
    for (const auto& s : sums) m += s.values();
    return m / static_cast<double>(sums.size());
}

IndependenceSamplerSpec make_mis(const Vector& center, const Matrix& covariance) {
    try {
        return IndependenceSamplerSpec(center, covariance);
    } catch (const NumericalError&) {
        spdlog::warn("independence sampler covariance not SPD; adding 1e-10 * I");
        return IndependenceSamplerSpec(center, covariance + 1e-10 * Matrix::Identity(covariance.rows(), covariance.cols()));
    }
}

void finalize(DcResult& result, const ModelSpec& model, double burnin_fraction) {
    const auto& regimes = result.trace.regimes();
    const Regime& last = regimes.back();
    result.final_slice = result.trace.post_burnin(last, burnin_fraction);
    result.final_clones = last.clones;
    result.final_delta = last.delta;
    const Matrix draws = result.trace.draws(result.final_slice.first, result.final_slice.second);
    result.final_slice_mean = model.parameters(sample_mean(draws));
    result.final_slice_covariance = sample_covariance(draws);
    result.asymptotic_mle_covariance = static_cast<double>(last.clones) * result.final_slice_covariance;
}

DcResult run_abc_chain(const AbcProblem& problem, const EngineSpec& spec, double burnin_fraction, long adapt_interval,
                       const RandomSource& rng, const ChainOptions& options) {
    if (problem.model == nullptr || !problem.model->simulate) throw ConfigError("ABC chain: model cannot simulate");
    if (!problem.summarize) throw ConfigError("ABC chain: no summary function");
    if (spec.iterations < 1) throw ConfigError("ABC chain: need at least one iteration");
    if (problem.weights.size() != problem.observed.size())
        throw ConfigError("ABC chain: weight and summary dimensions differ");
    const ModelSpec& model = *problem.model;
    const Eigen::Index d = model.dim();

    RandomSource init_rng = rng.derive({streams::initial, 0});
    Vector theta = options.initial_theta ? *options.initial_theta : model.prior.sample(init_rng);
    if (theta.size() != d) throw ConfigError("ABC chain: initial theta has the wrong dimension");
    double log_prior = model.prior.log_density(theta);
    if (log_prior == log_zero) throw ConfigError("ABC chain: initial theta lies outside the prior support");

    const double final_delta = spec.deltas.back().second;
    const long final_delta_start = spec.deltas.back().first;
    const long final_regime_start = std::max(final_delta_start, spec.clones.back().first);

    CloneRunner runner(problem, options.threads);
    double delta = lookup(spec.deltas, 1);
    int clones = lookup(spec.clones, 1);
    std::vector<SummaryVector> current;
    bool current_ok = runner.run(theta, rng, streams::initial, 0, clones, current);
    double log_q = current_ok ? total_log_kernel(problem, delta, current) : log_zero;
    Vector current_summary = current_ok ? mean_summary(current) : Vector();

    AdaptiveRWState rw = AdaptiveRWState::initial(theta, adapt_interval);
    CovarianceAccumulator history(d);
    std::optional<IndependenceSamplerSpec> mis;

    DcResult result;
    result.trace = ChainTrace(model.names);
    long since_accept = 0;

    for (long j = 1; j <= spec.iterations; ++j) {
        const double new_delta = lookup(spec.deltas, j);
        const int new_clones = lookup(spec.clones, j);
        if (new_clones != clones) {
            if (spec.mode == ProposalMode::dynamic) {
                if (clones == 1) {
                    Vector center;
                    Matrix cov;
                    if (spec.regression_adjustment) {
                        const Regime& k1 = result.trace.regimes().back();
                        const auto [a, b] = result.trace.post_burnin(k1, burnin_fraction);
                        const Matrix draws = result.trace.draws(a, b);
                        Matrix sims(draws.rows(), problem.observed.size());
                        for (long i = a; i <= b; ++i) {
                            const auto& s = result.trace.rows()[static_cast<std::size_t>(i - 1)].summary;
                            if (s.size() != sims.cols())
                                throw ConfigError("regression adjustment: missing simulated summaries for iteration " +
                                                  std::to_string(i));
                            sims.row(i - a) = s.transpose();
                        }
                        const KernelSpec kern(KernelKind::gaussian, final_delta, problem.weights);
                        result.adjustment = regression_adjust(draws, sims, problem.observed, kern, spec.center_rule);
                        center = result.adjustment->center;
                        cov = result.adjustment->covariance;
                    } else {
                        if (result.mode.empty())
                            throw ConfigError("dynamic ABC-DC: no proposal was evaluated at the final delta with K=1, "
                                              "so there is no mode to centre the independence sampler on");
                        center = result.mode.best_theta;
                        cov = rw.covariance;
                    }
                    mis = make_mis(center, cov);
                    if (spec.start_at_center) {
                        const double lp = model.prior.log_density(center);
                        if (lp != log_zero) {
                            theta = center;
                            log_prior = lp;
                        } else {
                            spdlog::warn("independence sampler centre lies outside the prior; keeping the last state");
                        }
                    }
                } else {
                    const Regime& prev = result.trace.regimes().back();
                    const auto [a, b] = result.trace.post_burnin(prev, burnin_fraction);
                    const Matrix cov = sample_covariance(result.trace.draws(a, b));
                    try {
                        mis = IndependenceSamplerSpec(mis->center(), cov);
                    } catch (const NumericalError&) {
                        const std::string msg = "covariance of the K=" + std::to_string(clones) +
                                                " draws is not SPD; keeping the previous independence covariance";
                        spdlog::warn("{}", msg);
                        result.warnings.push_back(msg);
                    }
                }
            }
            clones = new_clones;
            delta = new_delta;
            // q* must be built from as many clones as q#: resimulate at the current theta.
            current_ok = runner.run(theta, rng, streams::rebalance, j, clones, current);
            log_q = current_ok ? total_log_kernel(problem, delta, current) : log_zero;
            current_summary = current_ok ? mean_summary(current) : Vector();
        } else if (new_delta != delta) {
            delta = new_delta;
            if (current_ok) log_q = total_log_kernel(problem, delta, current);
        }

        const bool use_mis = spec.mode == ProposalMode::dynamic && clones > 1;
        RandomSource prop_rng = rng.derive({streams::proposal, static_cast<std::uint64_t>(j)});
        const Vector proposal = use_mis ? mis_propose(*mis, prop_rng) : rw_propose(rw, theta, prop_rng);
        const double log_u = std::log(prop_rng.uniform());
        const double log_prior_prop = model.prior.log_density(proposal);

        bool accept = false;
        std::vector<SummaryVector> proposed;
        double log_q_prop = log_zero;
        if (log_prior_prop != log_zero) {
            if (runner.run(proposal, rng, streams::clone, j, clones, proposed)) {
                log_q_prop = total_log_kernel(problem, delta, proposed);
                if (options.on_proposal) options.on_proposal(j, proposed);
            }
            if (clones == 1 && j >= final_delta_start && log_q_prop != log_zero)
                result.mode.offer(log_q_prop + log_prior_prop, proposal);
            if (log_q_prop != log_zero) {
                if (log_q == log_zero) {
                    accept = true;
                } else {
                    double log_alpha = log_q_prop - log_q + log_prior_prop - log_prior;
                    if (use_mis)
                        log_alpha += mis_log_density(*mis, theta) - mis_log_density(*mis, proposal);
                    else if (options.include_rw_proposal_ratio)
                        log_alpha += rw_log_density(rw, proposal, theta) - rw_log_density(rw, theta, proposal);
                    accept = log_alpha >= 0.0 || log_u < log_alpha;
                }
            }
        }
        if (accept) {
            theta = proposal;
            log_prior = log_prior_prop;
            log_q = log_q_prop;
            current = std::move(proposed);
            current_ok = true;
            current_summary = mean_summary(current);
            since_accept = 0;
        } else {
            ++since_accept;
        }

        TraceRow row;
        row.iteration = j;
        row.delta = delta;
        row.clones = clones;
        row.accepted = accept;
        row.theta = theta;
        row.log_kernel = log_q;
        row.kernel_clones = current_ok ? static_cast<int>(current.size()) : clones;
        row.summary = current_summary;
        if (options.sink) options.sink->on_row(row);
        result.trace.push(std::move(row));

        if (!use_mis) {
            history.add(theta);
            if (j % adapt_interval == 0 && history.count() >= 2) rw_adapt_from(rw, history);
        }

        if (since_accept > 0 && since_accept % options.stagnation_window == 0) {
            const bool fatal = spec.mode == ProposalMode::dynamic && clones > 1 && j >= final_regime_start;
            const std::string msg = "no acceptances in the last " + std::to_string(options.stagnation_window) +
                                    " iterations (iteration " + std::to_string(j) + ", delta " +
                                    std::to_string(delta) + ", K " + std::to_string(clones) + ")";
            if (fatal)
                throw StagnationError(msg + " in the final regime; try a smaller jump in K or a larger delta");
            spdlog::warn("{}", msg);
            result.warnings.push_back(msg);
            result.stagnated = true;
        }
    }

    const Regime& last = result.trace.regimes().back();
    if (spec.mode == ProposalMode::dynamic && last.clones > 1 && last.accepted == 0)
        throw StagnationError("final regime (K=" + std::to_string(last.clones) +
                              ") accepted no proposals; try a smaller jump in K or a larger delta");
    if (options.sink) options.sink->finish();
    if (mis) result.independence_covariance = mis->covariance();
    result.failed_simulations = runner.failures;
    finalize(result, model, burnin_fraction);
    return result;
}

}  // namespace

DcResult abc_mcmc(const AbcProblem& problem, const DeltaSchedule& deltas, long iterations, const RandomSource& rng,
                  const ChainOptions& options) {
    EngineSpec spec;
    spec.deltas = deltas.breakpoints();
    spec.clones = {{1, 1}};
    spec.iterations = iterations;
    spec.mode = ProposalMode::random_walk;
    return run_abc_chain(problem, spec, options.burnin_fraction, options.adapt_interval, rng, options);
}

DcResult static_abc_dc(const AbcProblem& problem, double delta, int clones, long iterations, const RandomSource& rng,
                       const ChainOptions& options) {
    if (clones < 1) throw DomainError("static_abc_dc: K must be >= 1");
    if (!(delta > 0.0)) throw DomainError("static_abc_dc: delta must be positive");
    EngineSpec spec;
    spec.deltas = {{1, delta}};
    spec.clones = {{1, clones}};
    spec.iterations = iterations;
    spec.mode = ProposalMode::random_walk;
    return run_abc_chain(problem, spec, options.burnin_fraction, options.adapt_interval, rng, options);
}

DcResult dynamic_abc_dc(const AbcProblem& problem, const AbcDcConfig& config, const RandomSource& rng,
                        const ChainOptions& options) {
    config.validate();
    EngineSpec spec;
    spec.deltas = config.delta_schedule.breakpoints();
    spec.clones = config.clone_schedule.breakpoints();
    spec.iterations = config.total_iterations;
    spec.mode = ProposalMode::dynamic;
    spec.regression_adjustment = config.use_regression_adjustment;
    spec.center_rule = config.center_rule;
    spec.start_at_center = config.start_cloning_at_center;
    return run_abc_chain(problem, spec, config.burnin_fraction, config.adapt_interval, rng, options);
}

DcResult dc_mcmc(const ModelSpec& model, const Dataset& observed, int clones, long iterations,
                 const AdaptiveRWState& proposal, const RandomSource& rng, const ChainOptions& options) {
    if (!model.simulate_latent || !model.measurement_log_density)
        throw ConfigError("dc_mcmc: model has no evaluable measurement density");
    if (clones < 1) throw DomainError("dc_mcmc: K must be >= 1");
    if (iterations < 1) throw ConfigError("dc_mcmc: need at least one iteration");
    const Eigen::Index d = model.dim();
    if (proposal.dim() != d) throw DomainError("dc_mcmc: proposal dimension mismatch");

    RandomSource init_rng = rng.derive({streams::initial, 0});
    Vector theta = options.initial_theta ? *options.initial_theta : model.prior.sample(init_rng);
    double log_prior = model.prior.log_density(theta);
    if (log_prior == log_zero) throw ConfigError("dc_mcmc: initial theta lies outside the prior support");

    std::unique_ptr<tbb::task_arena> arena;
    if (options.threads > 1) arena = std::make_unique<tbb::task_arena>(static_cast<int>(options.threads));
    long failures = 0;
    // Sum over clones of log f(y | X^(k), theta); log_zero when any term is not finite.
    auto log_q_at = [&](const Vector& th, std::uint64_t tag, long j) {
        const auto k_count = static_cast<std::size_t>(clones);
        std::vector<double> terms(k_count);
        auto one = [&](std::size_t k) {
            RandomSource r = rng.derive({tag, static_cast<std::uint64_t>(j), k});
            terms[k] = model.measurement_log_density(observed, model.simulate_latent(th, r), th);
        };
        if (arena && k_count > 1)
            arena->execute([&] { tbb::parallel_for(std::size_t{0}, k_count, one); });
        else
            for (std::size_t k = 0; k < k_count; ++k) one(k);
        double total = 0.0;
        for (double t : terms) {
            if (!std::isfinite(t)) {
                ++failures;
                return log_zero;
            }
            total += t;
        }
        return total;
    };

    AdaptiveRWState rw = proposal;
    CovarianceAccumulator history(d);
    double log_q = log_q_at(theta, streams::initial, 0);
    DcResult result;
    result.trace = ChainTrace(model.names);
    long since_accept = 0;

    for (long j = 1; j <= iterations; ++j) {
        RandomSource prop_rng = rng.derive({streams::proposal, static_cast<std::uint64_t>(j)});
        const Vector prop = rw_propose(rw, theta, prop_rng);
        const double log_u = std::log(prop_rng.uniform());
        const double log_prior_prop = model.prior.log_density(prop);
        bool accept = false;
        double log_q_prop = log_zero;
        if (log_prior_prop != log_zero) {
            log_q_prop = log_q_at(prop, streams::clone, j);
            if (log_q_prop != log_zero) {
                const double log_alpha = log_q == log_zero ? 0.0 : log_q_prop - log_q + log_prior_prop - log_prior;
                accept = log_alpha >= 0.0 || log_u < log_alpha;
            }
        }
        if (accept) {
            theta = prop;
            log_prior = log_prior_prop;
            log_q = log_q_prop;
            since_accept = 0;
        } else {
            ++since_accept;
        }
        TraceRow row;
        row.iteration = j;
        row.delta = 0.0;
        row.clones = clones;
        row.accepted = accept;
        row.theta = theta;
        row.log_kernel = log_q;
        row.kernel_clones = clones;
        if (options.sink) options.sink->on_row(row);
        result.trace.push(std::move(row));

        history.add(theta);
        if (j % rw.adapt_interval == 0 && history.count() >= 2) rw_adapt_from(rw, history);
        if (since_accept > 0 && since_accept % options.stagnation_window == 0) {
            const std::string msg = "dc_mcmc: no acceptances in the last " +
                                    std::to_string(options.stagnation_window) + " iterations";
            spdlog::warn("{}", msg);
            result.warnings.push_back(msg);
            result.stagnated = true;
        }
    }
    if (failures > 0) {
        result.warnings.push_back(std::to_string(failures) + " evaluations had a non-finite measurement density");
        spdlog::warn("dc_mcmc: {} non-finite measurement densities (proposals rejected)", failures);
    }
    if (options.sink) options.sink->finish();
    result.failed_simulations = failures;
    finalize(result, model, options.burnin_fraction);
    return result;
}

}  // namespace dcabc
