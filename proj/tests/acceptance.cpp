// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion ids
// (AC1 .. AC9) as arguments to run a subset.

#include "dcabc/errors.hpp"
#include "dcabc/experiment.hpp"
#include "dcabc/inference.hpp"
#include "dcabc/io.hpp"
#include "dcabc/kernels.hpp"
#include "dcabc/models.hpp"
#include "dcabc/proposals.hpp"
#include "dcabc/samplers.hpp"
#include "toy_model.hpp"

#include <fmt/core.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

using namespace dcabc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

json load_config(const std::string& name) {
    return json::parse(read_text_file(fs::path(DCABC_EXPERIMENTS) / (name + ".json")));
}

// Runs a stored experiment with the dataset seed and chain seed replaced.
struct Run {
    Experiment exp;
    Resolved inputs;
    DcResult result;
};

Run run_config(json cfg, std::uint64_t data_seed, std::uint64_t chain_seed) {
    cfg["dataset"]["seed"] = data_seed;
    cfg["seed"] = chain_seed;
    Run r{load_experiment(std::move(cfg), DCABC_EXPERIMENTS), Resolved{}, DcResult{}};
    r.inputs = resolve_inputs(r.exp, 1);
    r.result = run_sampler(r.exp, r.inputs, 1);
    return r;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector regime_variance(const DcResult& res, const Regime& regime, double burnin) {
    const auto [a, b] = res.trace.post_burnin(regime, burnin);
    return sample_covariance(res.trace.draws(a, b)).diagonal();
}

std::string fixed(const Vector& v, int digits = 3) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt::format("{:.{}f}", v[i], digits);
    return s + ")";
}

Dataset gbm_dataset(std::uint64_t seed) {
    std::vector<double> t(501);
    for (int i = 0; i <= 500; ++i) t[i] = i / 500.0;
    RandomSource rng(seed, streams::dataset);
    return gbm2d_simulate(Gbm2dParams{}, t, 1.0, 2.0, rng);
}

// ---------------------------------------------------------------------------

Outcome ac1() {
    const auto t0 = Clock::now();
    double worst = 0;
    int ok = 0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        const Dataset d = gbm_dataset(5000 + s);
        try {
            const GbmMleResult r = gbm2d_exact_mle(d, s);
            const double diff = (r.params.to_vector() - gbm2d_moment_mle(d).to_vector()).cwiseAbs().maxCoeff();
            worst = std::max(worst, diff);
            ok += diff <= 1e-6;
        } catch (const OptimizationError& e) {
            worst = INFINITY;
        }
    }
    const double secs = seconds_since(t0);
    return {ok == 20 && secs < 10.0,
            fmt::format("{}/20 datasets within 1e-6, max |diff| {:.2e}, {:.2f}s", ok, worst, secs)};
}

Outcome ac2() {
    const auto t0 = Clock::now();
    const json cfg = load_config("gbm_abcdc_fast");
    const Vector tol = (Vector(5) << 1.2, 0.22, 0.7, 0.128, 0.228).finished();
    int ok = 0;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        try {
            const Run r = run_config(cfg, 1000 + s, s);
            const Vector mle = gbm2d_exact_mle(r.exp.data, s).params.to_vector();
            const Vector err = (r.result.final_slice_mean.values() - mle).cwiseAbs();
            ok += (err.array() <= tol.array()).all();
        } catch (const std::exception& e) {
            spdlog::error("AC2 seed {}: {}", s, e.what());
        }
    }
    return {ok >= 8, fmt::format("{}/10 runs within 2x RMSE of the exact MLE, {:.0f}s", ok, seconds_since(t0))};
}

// AC3 and AC4 share the same ten g-and-k runs.
struct GandkRuns {
    int in_band = 0;
    int shrunk = 0;
    int completed = 0;
    double secs = 0;
};

const GandkRuns& gandk_runs() {
    static const GandkRuns runs = [] {
        GandkRuns out;
        const auto t0 = Clock::now();
        const json cfg = load_config("gandk_abcdc_fast");
        const Vector lo = (Vector(4) << 2.89, 0.78, 1.4, 0.31).finished();
        const Vector hi = (Vector(4) << 3.07, 1.17, 3.5, 0.69).finished();
        for (std::uint64_t s = 1; s <= 10; ++s) {
            try {
                const Run r = run_config(cfg, 1000 + s, s);
                ++out.completed;
                const Vector m = r.result.final_slice_mean.values();
                out.in_band += (m.array() >= lo.array()).all() && (m.array() <= hi.array()).all();
                const auto& regimes = r.result.trace.regimes();
                const double burn = r.exp.config.value("burnin_fraction", 0.1);
                const Vector v1 = regime_variance(r.result, regimes.front(), burn);
                const Vector v5 = regime_variance(r.result, regimes.back(), burn);
                out.shrunk += regimes.back().clones == 5 && (v5.array() < v1.array()).all();
            } catch (const std::exception& e) {
                spdlog::error("g-and-k seed {}: {}", s, e.what());
            }
        }
        out.secs = seconds_since(t0);
        return out;
    }();
    return runs;
}

Outcome ac3() {
    const GandkRuns& g = gandk_runs();
    return {g.in_band >= 8, fmt::format("{}/10 final-slice means inside the bands, {:.0f}s", g.in_band, g.secs)};
}

Outcome ac4() {
    const GandkRuns& g = gandk_runs();
    return {g.shrunk >= 9, fmt::format("{}/10 runs with every K=5 variance below K=1", g.shrunk)};
}

Outcome ac5() {
    const auto t0 = Clock::now();
    const ModelSpec model = toy::model();
    AbcProblem p;
    p.model = &model;
    p.summarize = model.builtin_summaries;
    p.observed = SummaryVector(Vector::Constant(1, 7));
    p.weights = WeightMatrix::unit(1);
    ChainOptions o;
    o.initial_theta = Vector::Constant(1, 8.0);

    const auto exact1 = toy::powered_posterior(7, 1.5, 1);
    const DcResult r1 = static_abc_dc(p, 1.5, 1, 100000, RandomSource(77, 0), o);
    std::vector<double> f(toy::values + 1, 0.0);
    for (const auto& row : r1.trace.rows()) f[toy::bucket(row.theta[0])] += 1.0 / 100000;
    double tv = 0;
    for (int m = 1; m <= toy::values; ++m) tv += 0.5 * std::abs(f[m] - exact1[m]);

    const auto exact8 = toy::powered_posterior(7, 1.5, 8);
    const DcResult r8 = static_abc_dc(p, 1.5, 8, 20000, RandomSource(78, 0), o);
    std::vector<double> c(toy::values + 1, 0.0);
    for (const auto& row : r8.trace.rows()) c[toy::bucket(row.theta[0])] += 1;
    const auto argmax = [](const std::vector<double>& v) { return std::max_element(v.begin(), v.end()) - v.begin(); };
    const bool mode_ok = argmax(c) == argmax(exact8);
    return {tv <= 0.05 && mode_ok, fmt::format("TV {:.4f}, K=8 chain mode {} vs enumerated {}, {:.1f}s", tv,
                                               argmax(c), argmax(exact8), seconds_since(t0))};
}

Outcome ac6() {
    RandomSource rng(66, 0);
    const int n = 500, ds = 4, d = 3;
    Matrix beta = Matrix::Zero(ds, d);
    for (int i = 0; i < ds; ++i)
        for (int j = 0; j < d; ++j) beta(i, j) = rng.normal();
    const Vector alpha = (Vector(3) << 1.0, -2.0, 0.5).finished();
    Vector s_obs(ds);
    for (int i = 0; i < ds; ++i) s_obs[i] = rng.normal();
    Matrix sims(n, ds), draws(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < ds; ++j) sims(i, j) = s_obs[j] + 2 * rng.normal();
        draws.row(i) = alpha.transpose() + (sims.row(i) - s_obs.transpose()) * beta;
    }
    const KernelSpec kern(KernelKind::gaussian, 3.0, WeightMatrix::from_scales(Vector::Constant(ds, 1.3)));
    const AdjustmentResult r = regression_adjust(draws, sims, SummaryVector(s_obs), kern);

    // normal equations oracle
    Matrix z(n, ds + 1);
    Vector w(n);
    for (int i = 0; i < n; ++i) {
        z(i, 0) = 1;
        z.row(i).tail(ds) = sims.row(i) - s_obs.transpose();
        w[i] = std::exp(log_kernel(kern, SummaryVector(s_obs), SummaryVector(sims.row(i).transpose())));
    }
    const Matrix ztw = z.transpose() * w.asDiagonal();
    const Matrix oracle = (ztw * z).ldlt().solve(ztw * draws);

    const double beta_err = (r.beta_hat - beta).cwiseAbs().maxCoeff();
    const double oracle_err = (r.beta_hat - oracle.bottomRows(ds)).cwiseAbs().maxCoeff();
    const double spread = (r.adjusted_draws.rowwise() - alpha.transpose()).cwiseAbs().maxCoeff();
    return {beta_err <= 1e-10 && oracle_err <= 1e-10 && spread <= 1e-10,
            fmt::format("|beta - truth| {:.1e}, |beta - normal equations| {:.1e}, adjusted spread {:.1e}", beta_err,
                        oracle_err, spread)};
}

Outcome ac7() {
    const auto t0 = Clock::now();
    std::vector<double> log_a;
    int sigma_vague = 0;
    std::string detail;
    for (int c = 1; c <= 3; ++c) {
        try {
            const json cfg = load_config("gompertz_abcdc_chain" + std::to_string(c));
            const Run r = run_config(cfg, cfg["dataset"]["seed"].get<std::uint64_t>(), cfg["seed"].get<std::uint64_t>());
            const auto& regimes = r.result.trace.regimes();
            const double burn = r.exp.config.value("burnin_fraction", 0.1);
            const double sd1 = std::sqrt(regime_variance(r.result, regimes.front(), burn)[2]);
            const double sd11 = std::sqrt(regime_variance(r.result, regimes.back(), burn)[2]);
            log_a.push_back(r.result.final_slice_mean.values()[0]);
            sigma_vague += sd11 > 0.5 * sd1;
            detail += fmt::format(" chain{}: logA {:.3f}, sd(log sigma) K=1 {:.3f} K=11 {:.3f};", c, log_a.back(), sd1,
                                  sd11);
        } catch (const std::exception& e) {
            spdlog::error("Gompertz chain {}: {}", c, e.what());
        }
    }
    bool ok = log_a.size() == 3 && sigma_vague == 3;
    if (ok) {
        const auto [lo, hi] = std::minmax_element(log_a.begin(), log_a.end());
        ok = *hi - *lo <= 0.3;
        for (double a : log_a) ok = ok && std::abs(a - 8.01) <= 0.5;
    }
    return {ok, fmt::format("{} {:.0f}s", detail, seconds_since(t0))};
}

Outcome ac8() {
    const auto t0 = Clock::now();
    RandomSource rng(88, 0);
    long checks = 0, failures = 0;
    auto expect = [&](bool c) {
        ++checks;
        failures += !c;
    };

    for (int rep = 0; rep < 2000; ++rep) {
        const int ds = 1 + rep % 6;
        Vector w(ds), o(ds), s(ds);
        for (int j = 0; j < ds; ++j) {
            w[j] = 0.05 + 3 * rng.uniform();
            o[j] = 4 * rng.normal();
            s[j] = 4 * rng.normal();
        }
        const double delta = 0.05 + 2 * rng.uniform();
        const double c = 0.1 + 10 * rng.uniform();
        for (const auto kind : {KernelKind::gaussian, KernelKind::uniform}) {
            // scale invariance in (delta, Omega) -> (delta / c, c^2 Omega)
            const double a = log_kernel(KernelSpec(kind, delta, WeightMatrix(w)), SummaryVector(o), SummaryVector(s));
            const double b =
                log_kernel(KernelSpec(kind, delta / c, WeightMatrix(w * c * c)), SummaryVector(o), SummaryVector(s));
            expect(a == b || std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
            // additivity over clones
            std::vector<SummaryVector> clones;
            double sum = 0;
            const KernelSpec k(kind, delta, WeightMatrix(w));
            for (int m = 0; m < 1 + rep % 5; ++m) {
                Vector z(ds);
                for (int j = 0; j < ds; ++j) z[j] = o[j] + rng.normal();
                clones.emplace_back(z);
                sum += log_kernel(k, SummaryVector(o), clones.back());
            }
            const double total = cloned_log_kernel(k, SummaryVector(o), clones);
            expect(total == sum || std::abs(total - sum) <= 1e-12 * std::max(1.0, std::abs(sum)));
        }
        // proposal symmetry
        AdaptiveRWState st = AdaptiveRWState::initial(o);
        expect(rw_log_density(st, o, s) == rw_log_density(st, s, o));
    }

    const ModelSpec model = toy::model();
    AbcProblem p;
    p.model = &model;
    p.summarize = model.builtin_summaries;
    p.observed = SummaryVector(Vector::Constant(1, 7));
    p.weights = WeightMatrix::unit(1);
    ChainOptions one, many;
    one.initial_theta = many.initial_theta = Vector::Constant(1, 4.0);
    many.threads = 4;
    AbcDcConfig cfg;
    cfg.delta_schedule = DeltaSchedule({{1, 3.0}, {1001, 1.5}});
    cfg.clone_schedule = CloneSchedule({{1, 1}, {2001, 4}, {3001, 8}});
    cfg.total_iterations = 4000;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const DcResult a = dynamic_abc_dc(p, cfg, RandomSource(seed, 0), one);
        const DcResult b = dynamic_abc_dc(p, cfg, RandomSource(seed, 0), many);
        bool same = a.trace.size() == b.trace.size();
        for (std::size_t i = 0; same && i < a.trace.size(); ++i)
            same = a.trace.rows()[i].theta == b.trace.rows()[i].theta;
        expect(same);
        for (double rate : a.acceptance_rates()) expect(rate >= 0.0 && rate <= 1.0);
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && secs < 30.0,
            fmt::format("{}/{} invariant checks hold, {:.1f}s", checks - failures, checks, secs)};
}

Outcome ac9() {
    const auto t0 = Clock::now();
    // exact arithmetic on a fixed covariance
    Matrix cov(4, 4);
    cov.setZero();
    cov.diagonal() << 0.0003, 0.0045, 0.04, 0.0013;
    const Vector se = asymptotic_se(cov, 15);
    bool exact = true;
    for (int j = 0; j < 4; ++j) exact = exact && se[j] == std::sqrt(15.0 * cov(j, j));

    const json cfg = load_config("gandk_abcdc_slow");
    const Vector target = (Vector(4) << 0.07, 0.26, 0.77, 0.14).finished();
    int within = 0;
    std::string ses;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        try {
            const Run r = run_config(cfg, 1000 + s, s);
            const Vector v = asymptotic_se(r.result.final_slice_covariance, r.result.final_clones);
            within += ((v - target).cwiseAbs().array() <= 0.5 * target.array()).all();
            ses += " " + fixed(v);
        } catch (const std::exception& e) {
            spdlog::error("AC9 seed {}: {}", s, e.what());
        }
    }
    return {exact && within >= 3, fmt::format("exact {}, {}/5 seeds within 50%:{}, {:.0f}s", exact ? "yes" : "no",
                                              within, ses, seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::err);
    std::set<std::string> only(argv + 1, argv + argc);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
        {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}};
    int failed = 0;
    for (const auto& [id, fn] : criteria) {
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", id.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
