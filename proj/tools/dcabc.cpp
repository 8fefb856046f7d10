// dcabc: pilot / run / bootstrap / mle driver for the experiment configs.

#include "dcabc/errors.hpp"
#include "dcabc/experiment.hpp"
#include "dcabc/io.hpp"
#include "dcabc/models.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dcabc;

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, stagnation = 3, optimizer = 4 };

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::string out;
};

void set_log_level() {
    spdlog::set_default_logger(spdlog::stderr_color_mt("dcabc"));
    const char* env = std::getenv("DCABC_LOG");
    const std::string level = env ? env : "warn";
    if (level == "error") spdlog::set_level(spdlog::level::err);
    else if (level == "info") spdlog::set_level(spdlog::level::info);
    else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::set_level(spdlog::level::warn);
}

Experiment load(const Common& c) {
    if (c.config.empty()) throw ConfigError("--config is required");
    const fs::path path(c.config);
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    json cfg;
    try {
        cfg = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    if (c.seed) cfg["seed"] = *c.seed;
    return load_experiment(std::move(cfg), path.parent_path());
}

fs::path out_dir(const Common& c, const Experiment& exp) {
    return c.out.empty() ? fs::path("results") / exp.name : fs::path(c.out);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string format_vector(const Vector& v) {
    std::ostringstream ss;
    ss << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v[i]);
        ss << (i ? ", " : "") << buf;
    }
    ss << ')';
    return ss.str();
}

int cmd_pilot(const Common& c) {
    const Experiment exp = load(c);
    const PilotOutcome pilot = run_pilot(exp, c.threads);
    const fs::path dir = out_dir(c, exp);
    write_text_file(dir / "weights.json", dump(weights_to_json(pilot.weights, pilot.method)));
    if (pilot.projection) write_text_file(dir / "projection.json", dump(json(*pilot.projection)));
    std::cout << "pilot " << exp.name << ": omega = " << format_vector(pilot.weights.scales()) << " -> "
              << (dir / "weights.json").string() << "\n";
    return ok;
}

int cmd_run(const Common& c, long thin) {
    const auto start = std::chrono::steady_clock::now();
    const Experiment exp = load(c);
    const fs::path dir = out_dir(c, exp);
    fs::create_directories(dir);
    const Resolved inputs = resolve_inputs(exp, c.threads);

    std::ofstream trace(dir / "trace.csv", std::ios::trunc);
    if (!trace) throw ConfigError("cannot write " + (dir / "trace.csv").string());
    TraceCsvWriter writer(trace, static_cast<std::size_t>(exp.model.dim()),
                          exp.config.value("trace_flush_every", 1000L), thin);
    const DcResult result = run_sampler(exp, inputs, c.threads, &writer);
    trace.close();

    json doc = result_to_json(result, exp.config);
    doc["weights"] = weights_to_json(inputs.weights, inputs.pilot ? inputs.pilot->method : PilotMethod::mad);
    if (inputs.projection) doc["projection"] = *inputs.projection;
    if (exp.truth) doc["truth"] = vector_json(*exp.truth);
    write_text_file(dir / "result.json", dump(doc));

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text_file(dir / "timing.json", dump(json{{"wall_clock_seconds", seconds}}));

    std::ostringstream rates;
    for (const auto& r : result.trace.regimes()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " [d=%g K=%d %.1f%%]", r.delta, r.clones, 100.0 * r.acceptance_rate());
        rates << buf;
    }
    std::printf("%s: theta_hat=%s acceptance%s %.1fs\n", exp.name.c_str(),
                format_vector(result.final_slice_mean.values()).c_str(), rates.str().c_str(), seconds);
    return ok;
}

int cmd_bootstrap(const Common& c, std::optional<int> replicates_flag, const std::string& result_flag) {
    const Experiment exp = load(c);
    const json bc = exp.config.value("bootstrap", json::object());
    const int replicates = replicates_flag ? *replicates_flag : bc.value("replicates", 100);

    Vector theta_hat;
    std::string result_path = result_flag;
    if (result_path.empty() && bc.contains("result")) result_path = (exp.base_dir / bc.at("result").get<std::string>()).string();
    if (!result_path.empty()) {
        if (!fs::exists(result_path)) throw ConfigError("result file not found: " + result_path);
        theta_hat = vector_from_json(json::parse(read_text_file(result_path)).at("theta_hat"));
    } else if (bc.contains("theta_hat")) {
        theta_hat = vector_from_json(bc.at("theta_hat"));
    } else {
        throw ConfigError("bootstrap needs a point estimate: bootstrap.theta_hat, bootstrap.result or --result");
    }
    if (theta_hat.size() != exp.model.dim()) throw ConfigError("bootstrap point estimate has the wrong dimension");

    const std::string estimator = bc.value("estimator", "abc");
    ReplicateEstimator estimate;
    std::optional<Resolved> inputs;
    unsigned inner_threads = 1;
    if (estimator == "exact_mle") {
        if (exp.model.name != "gbm2d") throw ConfigError("exact_mle estimator is only available for gbm2d");
        estimate = [](const Dataset& d, RandomSource& rng) { return gbm2d_exact_mle(d, rng.key()).params.to_vector(); };
    } else if (estimator == "moment_mle") {
        if (exp.model.name != "gbm2d") throw ConfigError("moment_mle estimator is only available for gbm2d");
        estimate = [](const Dataset& d, RandomSource&) { return gbm2d_moment_mle(d).to_vector(); };
    } else if (estimator == "abc") {
        // Weights and summaries are fixed once and reused for every replicate.
        inputs = resolve_inputs(exp, c.threads);
        estimate = [&exp, &inputs, inner_threads](const Dataset& d, RandomSource& rng) {
            Experiment rep = with_dataset(exp, d);
            rep.seed = rng.key();
            return estimate_theta(rep, *inputs, inner_threads);
        };
    } else {
        throw ConfigError("bootstrap.estimator must be abc, exact_mle or moment_mle");
    }

    const BootstrapReport report = parametric_bootstrap(exp.model.simulate, estimate, theta_hat, replicates,
                                                        RandomSource(exp.seed, streams::bootstrap), c.threads);
    const fs::path dir = out_dir(c, exp);
    json doc = bootstrap_to_json(report, exp.model.names, theta_hat);
    doc["config"] = exp.config;
    write_text_file(dir / "bootstrap.json", dump(doc));
    std::ostringstream csv;
    write_bootstrap_csv(csv, report, exp.model.names);
    write_text_file(dir / "bootstrap.csv", csv.str());
    std::cout << csv.str();
    return ok;
}

int cmd_mle(const Common& c, const std::string& data_path) {
    Dataset data;
    std::uint64_t seed = c.seed.value_or(0);
    fs::path dir = c.out.empty() ? fs::path("results") / "mle" : fs::path(c.out);
    if (!data_path.empty()) {
        data = read_dataset_csv(data_path);
    } else {
        const Experiment exp = load(c);
        if (exp.model.name != "gbm2d") throw ConfigError("mle is only available for the gbm2d model");
        data = exp.data;
        seed = exp.seed;
        dir = out_dir(c, exp);
    }
    if (data.dim() != 2) throw ConfigError("mle needs a two-column (t,x,y) dataset");
    const GbmMleResult r = gbm2d_exact_mle(data, seed);
    const json doc{{"parameters", {"mu1", "logSigma1", "mu2", "logSigma2", "rho"}},
                   {"estimate", vector_json(r.params.to_vector())},
                   {"loglik", r.loglik},
                   {"moment_estimate", vector_json(r.moment_params.to_vector())},
                   {"moment_loglik", r.moment_loglik},
                   {"starts", r.starts}};
    write_text_file(dir / "mle.json", dump(doc));
    std::printf("mle: theta=%s loglik=%.6f\n", format_vector(r.params.to_vector()).c_str(), r.loglik);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    set_log_level();
    CLI::App app{"Data-cloning ABC: pilot runs, samplers, bootstrap and exact GBM MLE"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&common](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", common.config, "experiment config (JSON)");
        if (config_required) opt->required();
        sub->add_option("--seed", common.seed, "master seed (overrides the config)");
        sub->add_option("--threads", common.threads, "worker threads for clones / bootstrap replicates")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", common.out, "output directory");
    };

    auto* pilot = app.add_subcommand("pilot", "pilot ABC-MCMC with unit weights; writes weights.json");
    add_common(pilot, true);

    long thin = 1;
    auto* run = app.add_subcommand("run", "run the configured sampler; writes trace.csv and result.json");
    add_common(run, true);
    run->add_option("--thin", thin, "keep every n-th trace row in trace.csv")->check(CLI::PositiveNumber);

    std::optional<int> replicates;
    std::string result_path;
    auto* boot = app.add_subcommand("bootstrap", "parametric bootstrap around a point estimate");
    add_common(boot, true);
    boot->add_option("-B,--replicates", replicates, "number of bootstrap replicates");
    boot->add_option("--result", result_path, "result.json supplying theta_hat");

    std::string data_path;
    auto* mle = app.add_subcommand("mle", "exact maximum likelihood for the 2D GBM model");
    add_common(mle, false);
    mle->add_option("--data", data_path, "dataset CSV (t,x,y)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*pilot) return cmd_pilot(common);
        if (*run) return cmd_run(common, thin);
        if (*boot) return cmd_bootstrap(common, replicates, result_path);
        if (*mle) {
            if (data_path.empty() && common.config.empty()) throw ConfigError("mle needs --data or --config");
            return cmd_mle(common, data_path);
        }
    } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return config_error;
    } catch (const DomainError& e) {
        spdlog::error("invalid input: {}", e.what());
        return config_error;
    } catch (const StagnationError& e) {
        spdlog::error("sampler stagnated: {}", e.what());
        return stagnation;
    } catch (const OptimizationError& e) {
        std::ostringstream best;
        for (std::size_t i = 0; i < e.best_point().size(); ++i) best << (i ? ", " : "") << e.best_point()[i];
        spdlog::error("optimizer failed: {} (best point: [{}])", e.what(), best.str());
        return optimizer;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return failure;
    }
    return failure;
}
