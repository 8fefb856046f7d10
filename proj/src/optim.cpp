#include "dcabc/optim.hpp"
#include "dcabc/errors.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <limits>
#include <memory>

namespace dcabc {
namespace {

struct Context {
    const std::function<double(const Vector&)>* objective;
    Vector scratch;
};

double trampoline(const gsl_vector* x, void* params) {
    auto* ctx = static_cast<Context*>(params);
    for (Eigen::Index i = 0; i < ctx->scratch.size(); ++i) ctx->scratch[i] = gsl_vector_get(x, static_cast<size_t>(i));
    const double v = (*ctx->objective)(ctx->scratch);
    // nmsimplex2 cannot cope with NaN; treat it as a wall.
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
}

struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
    void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

std::unique_ptr<gsl_vector, VectorDeleter> to_gsl(const Vector& v) {
    std::unique_ptr<gsl_vector, VectorDeleter> out(gsl_vector_alloc(static_cast<size_t>(v.size())));
    for (Eigen::Index i = 0; i < v.size(); ++i) gsl_vector_set(out.get(), static_cast<size_t>(i), v[i]);
    return out;
}

}  // namespace

SimplexResult nelder_mead(const std::function<double(const Vector&)>& objective, const Vector& start,
                          const Vector& step, double size_tol, long max_iterations) {
    if (start.size() != step.size() || start.size() == 0) throw DomainError("nelder_mead: bad dimensions");
    gsl_set_error_handler_off();

    Context ctx{&objective, Vector(start.size())};
    gsl_multimin_function fn;
    fn.n = static_cast<size_t>(start.size());
    fn.f = &trampoline;
    fn.params = &ctx;

    auto x = to_gsl(start);
    auto ss = to_gsl(step);
    std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, fn.n));
    if (gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), ss.get()) != GSL_SUCCESS)
        throw NumericalError("nelder_mead: failed to initialise simplex");

    SimplexResult result;
    int status = GSL_CONTINUE;
    while (status == GSL_CONTINUE && result.iterations < max_iterations) {
        ++result.iterations;
        if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), size_tol);
    }
    result.converged = status == GSL_SUCCESS;
    result.x.resize(start.size());
    const gsl_vector* best = gsl_multimin_fminimizer_x(m.get());
    for (Eigen::Index i = 0; i < start.size(); ++i) result.x[i] = gsl_vector_get(best, static_cast<size_t>(i));
    result.value = gsl_multimin_fminimizer_minimum(m.get());
    return result;
}

}  // namespace dcabc
