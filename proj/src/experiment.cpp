#include "dcabc/experiment.hpp"
#include "dcabc/errors.hpp"
#include "dcabc/io.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace dcabc {
namespace {

using nlohmann::json;

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing \"" + key + "\"");
    return j.at(key);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field \"") + key + "\": " + e.what());
    }
}

Vector vector_field(const json& j, const char* key, const std::string& where) {
    try {
        return vector_from_json(require(j, key, where));
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

DeltaSchedule delta_schedule_from(const json& j, const std::string& where) {
    try {
        if (j.is_number()) return DeltaSchedule::constant(j.get<double>());
        return DeltaSchedule(j.get<std::vector<std::pair<long, double>>>());
    } catch (const json::exception& e) {
        throw ConfigError(where + ": expected [[start, delta], ...]: " + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

CloneSchedule clone_schedule_from(const json& j, const std::string& where) {
    try {
        return CloneSchedule(j.get<std::vector<std::pair<long, int>>>());
    } catch (const json::exception& e) {
        throw ConfigError(where + ": expected [[start, K], ...]: " + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

std::vector<double> uniform_times(std::size_t n, double horizon) {
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = horizon * static_cast<double>(i) / static_cast<double>(n);
    return t;
}

ModelSpec build_model(const json& m, const std::optional<Dataset>& file_data) {
    const std::string type = require(m, "type", "model").get<std::string>();
    if (type == "gandk") {
        const auto n = file_data ? file_data->rows() : get_or<std::size_t>(m, "n", 10000);
        return make_gandk_model(n, get_or<double>(m, "c", 0.8));
    }
    if (type == "gompertz") {
        const auto times = file_data ? file_data->times() : normalized_times(get_or<std::size_t>(m, "intervals", 50));
        double x0 = 0.0;
        if (m.contains("x0")) {
            x0 = m.at("x0").get<double>();
        } else {
            x0 = std::exp(require(m, "log_x0", "model").get<double>());
        }
        const double sigma_eps = std::exp(get_or<double>(m, "log_sigma_eps", -1.609));
        return make_gompertz_model(times, x0, sigma_eps);
    }
    if (type == "gbm2d") {
        const auto times = file_data ? file_data->times()
                                     : uniform_times(get_or<std::size_t>(m, "observations", 500),
                                                     get_or<double>(m, "horizon", 1.0));
        return make_gbm2d_model(times, get_or<double>(m, "x0", 1.0), get_or<double>(m, "y0", 2.0));
    }
    throw ConfigError("model.type must be one of gandk, gompertz, gbm2d (got \"" + type + "\")");
}

std::filesystem::path resolve(const Experiment& exp, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : exp.base_dir / path;
}

ChainOptions chain_options(const Experiment& exp, const json& section, unsigned threads, TraceSink* sink) {
    ChainOptions o;
    const json& c = exp.config;
    if (section.contains("initial_theta"))
        o.initial_theta = vector_field(section, "initial_theta", "pilot");
    else if (c.contains("initial_theta"))
        o.initial_theta = vector_field(c, "initial_theta", "config");
    o.adapt_interval = get_or<long>(c, "adapt_interval", 1000);
    o.burnin_fraction = get_or<double>(c, "burnin_fraction", 0.1);
    o.stagnation_window = get_or<long>(c, "stagnation_window", 5000);
    o.threads = threads;
    o.sink = sink;
    if (o.initial_theta && o.initial_theta->size() != exp.model.dim())
        throw ConfigError("initial_theta has " + std::to_string(o.initial_theta->size()) + " entries, model expects " +
                          std::to_string(exp.model.dim()));
    if (o.adapt_interval < 1 || o.stagnation_window < 1) throw ConfigError("adapt_interval and stagnation_window must be >= 1");
    return o;
}

KernelKind kernel_of(const Experiment& exp) {
    const auto k = get_or<std::string>(exp.config, "kernel", "gaussian");
    if (k == "gaussian") return KernelKind::gaussian;
    if (k == "uniform") return KernelKind::uniform;
    throw ConfigError("kernel must be gaussian or uniform");
}

PilotMethod pilot_method(const json& pilot) {
    const auto m = get_or<std::string>(pilot, "method", "mad");
    if (m == "mad") return PilotMethod::mad;
    if (m == "sd") return PilotMethod::sd;
    throw ConfigError("pilot.method must be mad or sd");
}

AbcProblem make_problem(const Experiment& exp, const Summarizer& summarize, const WeightMatrix& weights) {
    AbcProblem p;
    p.model = &exp.model;
    p.summarize = summarize;
    try {
        p.observed = summarize(exp.data);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("observed data: cannot compute summaries: ") + e.what());
    }
    p.kernel = kernel_of(exp);
    p.weights = weights;
    return p;
}

}  // namespace

Experiment load_experiment(json config, const std::filesystem::path& base_dir) {
    Experiment exp;
    exp.base_dir = base_dir;
    exp.name = get_or<std::string>(config, "name", "experiment");
    exp.seed = get_or<std::uint64_t>(config, "seed", 1);

    const json& ds = require(config, "dataset", "config");
    std::optional<Dataset> file_data;
    if (ds.contains("path")) {
        const std::filesystem::path p(ds.at("path").get<std::string>());
        file_data = read_dataset_csv(p.is_absolute() ? p : base_dir / p);
    }
    exp.model = build_model(require(config, "model", "config"), file_data);
    if (file_data) {
        exp.data = std::move(*file_data);
    } else {
        const Vector truth = vector_field(ds, "truth", "dataset");
        if (truth.size() != exp.model.dim()) throw ConfigError("dataset.truth has the wrong dimension");
        RandomSource rng(get_or<std::uint64_t>(ds, "seed", exp.seed), streams::dataset);
        try {
            exp.data = exp.model.simulate(truth, rng);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("dataset.truth: ") + e.what());
        }
        exp.truth = truth;
    }
    exp.config = std::move(config);
    return exp;
}

Experiment load_experiment_file(const std::filesystem::path& path) {
    json config;
    try {
        config = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    return load_experiment(std::move(config), path.parent_path());
}

Experiment with_dataset(const Experiment& exp, Dataset data) {
    Experiment out = exp;
    out.data = std::move(data);
    out.truth.reset();
    return out;
}

Algorithm algorithm_of(const Experiment& exp) {
    const auto a = require(exp.config, "algorithm", "config").get<std::string>();
    if (a == "abc_mcmc") return Algorithm::abc_mcmc;
    if (a == "static_abc_dc") return Algorithm::static_abc_dc;
    if (a == "dynamic_abc_dc") return Algorithm::dynamic_abc_dc;
    if (a == "dc_mcmc") return Algorithm::dc_mcmc;
    throw ConfigError("algorithm must be abc_mcmc, static_abc_dc, dynamic_abc_dc or dc_mcmc");
}

Summarizer summarizer_for(const Experiment& exp, const std::optional<SummaryProjection>& projection) {
    if (projection) {
        auto p = *projection;
        return [p](const Dataset& d) { return p.apply(raw_and_squared_features(d)); };
    }
    if (!exp.model.builtin_summaries) throw ConfigError("model " + exp.model.name + " has no builtin summaries");
    return exp.model.builtin_summaries;
}

std::optional<SummaryProjection> fit_projection(const Experiment& exp) {
    const json s = exp.config.value("summaries", json::object());
    const auto type = get_or<std::string>(s, "type", "builtin");
    if (type == "builtin") return std::nullopt;
    if (type != "semi_automatic") throw ConfigError("summaries.type must be builtin or semi_automatic");
    if (s.contains("file")) {
        const auto path = resolve(exp, s.at("file").get<std::string>());
        try {
            return json::parse(read_text_file(path)).get<SummaryProjection>();
        } catch (const json::exception& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }
    const auto n = get_or<long>(s, "pilot_simulations", 20000);
    if (n < 2) throw ConfigError("summaries.pilot_simulations must be >= 2");
    const RandomSource root(exp.seed, streams::pilot);
    std::vector<Vector> params, features;
    for (long i = 0; i < n; ++i) {
        RandomSource rng = root.derive({1, static_cast<std::uint64_t>(i)});
        const Vector theta = exp.model.prior.sample(rng);
        try {
            features.push_back(raw_and_squared_features(exp.model.simulate(theta, rng)));
            params.push_back(theta);
        } catch (const DomainError&) {
        } catch (const DegenerateStatisticError&) {
        }
    }
    if (params.size() < 2) throw ConfigError("semi-automatic summaries: too few successful pilot simulations");
    Matrix pm(static_cast<Eigen::Index>(params.size()), exp.model.dim());
    Matrix fm(static_cast<Eigen::Index>(params.size()), features.front().size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        pm.row(static_cast<Eigen::Index>(i)) = params[i].transpose();
        fm.row(static_cast<Eigen::Index>(i)) = features[i].transpose();
    }
    return semi_automatic_summaries(pm, fm);
}

PilotOutcome run_pilot(const Experiment& exp, unsigned threads) {
    const json& pc = require(exp.config, "pilot", "config");
    PilotOutcome out;
    out.method = pilot_method(pc);
    out.projection = fit_projection(exp);
    const Summarizer summarize = summarizer_for(exp, out.projection);

    // Unit weights need the summary dimension, which the observed summary gives.
    const Eigen::Index ds = summarize(exp.data).size();
    const DeltaSchedule deltas = delta_schedule_from(require(pc, "delta_schedule", "pilot"), "pilot.delta_schedule");
    const long iterations = require(pc, "iterations", "pilot").get<long>();
    const long burnin = get_or<long>(pc, "burnin", iterations / 10);
    // Later rounds rerun the pilot weighted by the previous round's estimate.
    const int rounds = get_or<int>(pc, "rounds", 1);
    if (rounds < 1) throw ConfigError("pilot.rounds must be >= 1");
    // "accepted": summaries of accepted proposals. "proposed": every simulated
    // proposal. "replicates": fresh simulations at the pilot's post-burnin mean,
    // so each weight is the sampling spread of that statistic.
    const auto collect = get_or<std::string>(pc, "collect", "accepted");
    if (collect != "accepted" && collect != "proposed" && collect != "replicates")
        throw ConfigError("pilot.collect must be accepted, proposed or replicates");
    const long replicates = get_or<long>(pc, "replicates", 1000);
    // Common multiplier on every omega_j (a wider kernel in noise units).
    const double scale = get_or<double>(pc, "scale", 1.0);
    if (!(scale > 0.0)) throw ConfigError("pilot.scale must be positive");
    if (collect == "replicates" && replicates < 2) throw ConfigError("pilot.replicates must be >= 2");

    out.weights = WeightMatrix::unit(ds);
    for (int round = 0; round < rounds; ++round) {
        const AbcProblem problem = make_problem(exp, summarize, out.weights);
        ChainOptions options = chain_options(exp, pc, threads, nullptr);
        std::vector<SummaryVector> kept;
        if (collect == "proposed")
            options.on_proposal = [&kept, burnin](long j, const std::vector<SummaryVector>& clones) {
                if (j > burnin) kept.insert(kept.end(), clones.begin(), clones.end());
            };
        const RandomSource rng = RandomSource(exp.seed, streams::pilot).derive({2, static_cast<std::uint64_t>(round)});
        out.chain = abc_mcmc(problem, deltas, iterations, rng, options);
        if (collect == "accepted")
            for (const auto& row : out.chain.trace.rows())
                if (row.accepted && row.iteration > burnin) kept.emplace_back(row.summary);
        if (collect == "replicates") {
            const auto draws = out.chain.trace.draws(burnin + 1, iterations);
            if (draws.rows() < 1) throw ConfigError("pilot.burnin leaves no draws");
            const Vector center = draws.colwise().mean().transpose();
            const RandomSource sim_rng = RandomSource(exp.seed, streams::pilot).derive({3, static_cast<std::uint64_t>(round)});
            for (long i = 0; i < replicates; ++i) {
                RandomSource r = sim_rng.derive({static_cast<std::uint64_t>(i)});
                kept.push_back(summarize(exp.model.simulate(center, r)));
            }
            spdlog::info("pilot: weights from {} simulations at the post-burnin mean", replicates);
        }
        if (kept.size() < 2)
            throw StagnationError("pilot run kept " + std::to_string(kept.size()) +
                                  " summaries after burnin; need at least 2 to estimate weights");
        out.weights = pilot_weights(kept, out.method, 0);
        if (scale != 1.0) out.weights = WeightMatrix::from_scales(out.weights.scales() * scale);
        spdlog::info("pilot round {}: {} {} summaries after burnin", round + 1, kept.size(), collect);
    }
    return out;
}

Resolved resolve_inputs(const Experiment& exp, unsigned threads) {
    Resolved r;
    const json w = exp.config.value("weights", json{{"source", "pilot"}});
    const auto source = w.is_string() ? w.get<std::string>() : get_or<std::string>(w, "source", "pilot");
    if (source == "pilot") {
        r.pilot = run_pilot(exp, threads);
        r.weights = r.pilot->weights;
        r.projection = r.pilot->projection;
        return r;
    }
    r.projection = fit_projection(exp);
    const Eigen::Index ds = summarizer_for(exp, r.projection)(exp.data).size();
    if (source == "unit") {
        r.weights = WeightMatrix::unit(ds);
    } else if (source == "file") {
        const auto path = resolve(exp, require(w, "path", "weights").get<std::string>());
        try {
            r.weights = weights_from_json(json::parse(read_text_file(path)));
        } catch (const json::parse_error& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    } else if (source == "values") {
        r.weights = weights_from_json(w);
    } else {
        throw ConfigError("weights.source must be pilot, unit, file or values");
    }
    if (r.weights.size() != ds)
        throw ConfigError("weights have " + std::to_string(r.weights.size()) + " entries, summaries have " +
                          std::to_string(ds));
    return r;
}

DcResult run_sampler(const Experiment& exp, const Resolved& inputs, unsigned threads, TraceSink* sink) {
    const json& c = exp.config;
    const Algorithm algo = algorithm_of(exp);
    const ChainOptions options = chain_options(exp, json::object(), threads, sink);
    const RandomSource rng(exp.seed, 0);
    const long iterations = require(c, "iterations", "config").get<long>();
    if (iterations < 1) throw ConfigError("iterations must be >= 1");

    if (algo == Algorithm::dc_mcmc) {
        RandomSource init_rng = rng.derive({streams::initial, 0});
        const Vector theta0 = options.initial_theta ? *options.initial_theta : exp.model.prior.sample(init_rng);
        const auto proposal = AdaptiveRWState::initial(theta0, options.adapt_interval);
        return dc_mcmc(exp.model, exp.data, get_or<int>(c, "clones", 1), iterations, proposal, rng, options);
    }

    const AbcProblem problem = make_problem(exp, summarizer_for(exp, inputs.projection), inputs.weights);
    switch (algo) {
        case Algorithm::abc_mcmc:
            return abc_mcmc(problem, delta_schedule_from(require(c, "delta_schedule", "config"), "delta_schedule"),
                            iterations, rng, options);
        case Algorithm::static_abc_dc: {
            const DeltaSchedule d = delta_schedule_from(require(c, "delta_schedule", "config"), "delta_schedule");
            if (d.breakpoints().size() != 1) throw ConfigError("static_abc_dc needs a single delta");
            return static_abc_dc(problem, d.final_delta(), get_or<int>(c, "clones", 1), iterations, rng, options);
        }
        case Algorithm::dynamic_abc_dc: {
            AbcDcConfig cfg;
            cfg.delta_schedule = delta_schedule_from(require(c, "delta_schedule", "config"), "delta_schedule");
            cfg.clone_schedule = clone_schedule_from(require(c, "clone_schedule", "config"), "clone_schedule");
            cfg.total_iterations = iterations;
            cfg.burnin_fraction = options.burnin_fraction;
            cfg.adapt_interval = options.adapt_interval;
            cfg.use_regression_adjustment = get_or<bool>(c, "regression_adjustment", false);
            const auto rule = get_or<std::string>(c, "center_rule", "mean");
            if (rule != "mean" && rule != "mode") throw ConfigError("center_rule must be mean or mode");
            cfg.center_rule = rule == "mode" ? CenterRule::mode : CenterRule::mean;
            const auto start = get_or<std::string>(c, "cloning_start", "last_accepted");
            if (start != "last_accepted" && start != "center")
                throw ConfigError("cloning_start must be last_accepted or center");
            cfg.start_cloning_at_center = start == "center";
            cfg.master_seed = exp.seed;
            return dynamic_abc_dc(problem, cfg, rng, options);
        }
        case Algorithm::dc_mcmc:
            break;
    }
    throw ConfigError("unsupported algorithm");
}

Vector estimate_theta(const Experiment& exp, const Resolved& inputs, unsigned threads) {
    return run_sampler(exp, inputs, threads).final_slice_mean.values();
}

}  // namespace dcabc
