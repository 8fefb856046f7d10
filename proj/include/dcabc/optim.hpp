#pragma once

#include "dcabc/core.hpp"

#include <functional>

namespace dcabc {

struct SimplexResult {
    Vector x;
    double value = 0.0;
    bool converged = false;
    long iterations = 0;
};

// Derivative-free Nelder-Mead minimisation (GSL nmsimplex2). Stops when the
// simplex characteristic size drops below `size_tol`.
SimplexResult nelder_mead(const std::function<double(const Vector&)>& objective, const Vector& start,
                          const Vector& step, double size_tol = 1e-10, long max_iterations = 20000);

}  // namespace dcabc
