#pragma once

#include <cool/types.hpp>

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace cool {

/// f(x) and, when the pointer is non-null, its gradient.
using ValueGradient = std::function<double(const RVector&, RVector*)>;

struct MinimizerOptions
{
    double lower = -5.0;
    double upper = 5.0;
    double gradient_tolerance = 1e-8;
    int max_iterations = 500;
    /// Stop after `stall_iterations` consecutive iterations whose relative
    /// decrease is below this.
    double value_tolerance = 1e-14;
    int stall_iterations = 5;
    /// Stop as soon as the value drops to this level.
    double target_value = -std::numeric_limits<double>::infinity();
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
};

struct MinimizerReport
{
    RVector x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    double gradient_norm = 0.0;
    /// Accepted objective value after each iteration (non-increasing).
    std::vector<double> history;
    std::string stop_reason;
};

/// Quasi-Newton minimization with BFGS inverse-Hessian updates and a
/// strong-Wolfe line search. When the full step leaves the box [lower, upper]
/// a backtracking search along the clipped path is tried first, then the
/// Wolfe search capped at the first bound crossing. Variables held at a bound
/// by the gradient are frozen.
MinimizerReport minimize_bfgs(const ValueGradient& f, RVector x0, const MinimizerOptions& options);

} // namespace cool
