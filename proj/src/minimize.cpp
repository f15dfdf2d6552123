#include <cool/minimize.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cool {
namespace {

struct Trial
{
    double alpha = 0.0;
    double value = 0.0;
    double slope = 0.0;
    RVector x;
    RVector grad;
};

class LineSearch
{
public:
    LineSearch(const ValueGradient& f, const MinimizerOptions& opt, int& evaluations)
        : f_(f), opt_(opt), evaluations_(evaluations) {}

    // Returns the accepted trial; alpha == 0 signals failure.
    Trial run(const RVector& x, double value, const RVector& grad, const RVector& dir)
    {
        x_ = &x;
        dir_ = &dir;
        f0_ = value;
        slope0_ = grad.dot(dir);

        double alpha_max = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < dir.size(); ++i) {
            if (dir(i) > 0.0) alpha_max = std::min(alpha_max, (opt_.upper - x(i)) / dir(i));
            else if (dir(i) < 0.0) alpha_max = std::min(alpha_max, (opt_.lower - x(i)) / dir(i));
        }
        alpha_max = std::max(alpha_max, 0.0);
        if (alpha_max <= 0.0) return {};

        if (alpha_max < 1.0) {
            Trial projected = projected_search(value, grad, alpha_max);
            if (projected.alpha > 0.0) return projected;
        }

        Trial prev{0.0, value, slope0_, x, grad};
        double alpha = std::min(1.0, alpha_max);
        for (int i = 0; i < 40; ++i) {
            Trial cur = evaluate(alpha, alpha_max);
            if (!std::isfinite(cur.value)) {
                // Step probed an unstable region; shrink.
                alpha = 0.5 * (prev.alpha + alpha);
                if (alpha - prev.alpha < 1e-16) return best_fallback(prev);
                continue;
            }
            if (cur.value > f0_ + opt_.wolfe_c1 * alpha * slope0_ || (i > 0 && cur.value >= prev.value)) {
                return zoom(prev, cur);
            }
            if (std::abs(cur.slope) <= -opt_.wolfe_c2 * slope0_) return cur;
            if (cur.slope >= 0.0) return zoom(cur, prev);
            if (alpha >= alpha_max) return cur;
            prev = std::move(cur);
            alpha = std::min(2.0 * alpha, alpha_max);
        }
        return best_fallback(prev);
    }

private:
    // Backtracking along the bent path clip(x + alpha d) for alpha beyond the
    // first bound crossing, so several variables can reach the box at once.
    Trial projected_search(double value, const RVector& grad, double alpha_max)
    {
        for (double alpha = 1.0; alpha > alpha_max; alpha *= 0.5) {
            Trial t = evaluate(alpha, 0.0);
            if (!std::isfinite(t.value)) continue;
            const double predicted = grad.dot(t.x - *x_);
            if (predicted < 0.0 && t.value <= value + opt_.wolfe_c1 * predicted) return t;
        }
        return {};
    }

    Trial evaluate(double alpha, double alpha_max)
    {
        Trial t;
        t.alpha = alpha;
        t.x = (*x_ + alpha * *dir_).cwiseMax(opt_.lower).cwiseMin(opt_.upper);
        if (alpha >= alpha_max) {
            // Land exactly on the bound that limited the step.
            for (Eigen::Index i = 0; i < t.x.size(); ++i) {
                if (std::abs(t.x(i) - opt_.upper) < 1e-12) t.x(i) = opt_.upper;
                if (std::abs(t.x(i) - opt_.lower) < 1e-12) t.x(i) = opt_.lower;
            }
        }
        t.grad.resize(t.x.size());
        ++evaluations_;
        try {
            t.value = f_(t.x, &t.grad);
        } catch (const std::exception&) {
            t.value = std::numeric_limits<double>::infinity();
        }
        if (!std::isfinite(t.value) || !t.grad.allFinite()) {
            t.value = std::numeric_limits<double>::infinity();
            t.slope = 0.0;
        } else {
            t.slope = t.grad.dot(*dir_);
        }
        return t;
    }

    Trial zoom(Trial lo, Trial hi)
    {
        for (int j = 0; j < 40; ++j) {
            double alpha = interpolate(lo, hi);
            Trial cur = evaluate(alpha, std::numeric_limits<double>::infinity());
            if (!std::isfinite(cur.value) || cur.value > f0_ + opt_.wolfe_c1 * alpha * slope0_ ||
                cur.value >= lo.value) {
                hi = std::move(cur);
            } else {
                if (std::abs(cur.slope) <= -opt_.wolfe_c2 * slope0_) return cur;
                if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
            if (std::abs(hi.alpha - lo.alpha) < 1e-14 * std::max(1.0, lo.alpha)) break;
        }
        return best_fallback(lo);
    }

    // lo always satisfies sufficient decrease when alpha > 0.
    Trial best_fallback(Trial lo) const
    {
        if (lo.alpha > 0.0 && lo.value < f0_) return lo;
        return {};
    }

    static double interpolate(const Trial& lo, const Trial& hi)
    {
        const double a = lo.alpha;
        const double b = hi.alpha;
        double alpha = 0.5 * (a + b);
        if (std::isfinite(hi.value)) {
            // Cubic through both values and slopes.
            const double d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
            const double disc = d1 * d1 - lo.slope * hi.slope;
            if (disc >= 0.0) {
                const double d2 = std::copysign(std::sqrt(disc), b - a);
                const double c = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
                if (std::isfinite(c)) alpha = c;
            }
        }
        const double lo_edge = std::min(a, b);
        const double width = std::abs(b - a);
        // Keep the trial well inside the bracket.
        return std::clamp(alpha, lo_edge + 0.1 * width, lo_edge + 0.9 * width);
    }

    const ValueGradient& f_;
    const MinimizerOptions& opt_;
    int& evaluations_;
    const RVector* x_ = nullptr;
    const RVector* dir_ = nullptr;
    double f0_ = 0.0;
    double slope0_ = 0.0;
};

RVector projected_gradient(const RVector& x, const RVector& g, const MinimizerOptions& opt)
{
    RVector pg = g;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if ((x(i) <= opt.lower && g(i) > 0.0) || (x(i) >= opt.upper && g(i) < 0.0)) pg(i) = 0.0;
    }
    return pg;
}

} // namespace

MinimizerReport minimize_bfgs(const ValueGradient& f, RVector x0, const MinimizerOptions& options)
{
    MinimizerReport report;
    const Eigen::Index n = x0.size();
    RVector x = x0.cwiseMax(options.lower).cwiseMin(options.upper);
    RVector grad(n);
    double value = f(x, &grad);
    report.evaluations = 1;
    if (!std::isfinite(value) || !grad.allFinite()) {
        report.x = x;
        report.value = value;
        report.stop_reason = "non-finite objective at the starting point";
        return report;
    }

    RMatrix hinv = RMatrix::Identity(n, n);
    bool fresh = true;
    int stalled = 0;
    LineSearch search(f, options, report.evaluations);

    for (report.iterations = 0; report.iterations < options.max_iterations; ++report.iterations) {
        const RVector pg = projected_gradient(x, grad, options);
        report.gradient_norm = pg.norm();
        if (report.gradient_norm <= options.gradient_tolerance) {
            report.stop_reason = "gradient tolerance";
            break;
        }
        if (value <= options.target_value) {
            report.stop_reason = "target value reached";
            break;
        }

        // Quasi-Newton step in the free variables only.
        RVector dir = -hinv * pg;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (pg(i) == 0.0 && grad(i) != 0.0) dir(i) = 0.0;
            if ((x(i) <= options.lower && dir(i) < 0.0) || (x(i) >= options.upper && dir(i) > 0.0)) dir(i) = 0.0;
        }
        if (!(dir.dot(grad) < 0.0)) {
            hinv.setIdentity();
            fresh = true;
            dir = -pg;
        }

        Trial step = search.run(x, value, grad, dir);
        if (step.alpha == 0.0) {
            if (!fresh) {
                hinv.setIdentity();
                fresh = true;
                step = search.run(x, value, grad, -pg);
            }
            if (step.alpha == 0.0) {
                report.stop_reason = "line search failed";
                break;
            }
        }

        const RVector s = step.x - x;
        const RVector y = step.grad - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
            if (fresh) {
                hinv *= sy / y.squaredNorm();
                fresh = false;
            }
            const double rho = 1.0 / sy;
            const RVector hy = hinv * y;
            // Inverse-Hessian form of the rank-two secant update.
            hinv += rho * rho * (sy + y.dot(hy)) * (s * s.transpose()) -
                    rho * (hy * s.transpose() + s * hy.transpose());
        }

        const double decrease = value - step.value;
        stalled = (decrease <= options.value_tolerance * std::max(std::abs(value), 1e-300)) ? stalled + 1 : 0;
        x = step.x;
        value = step.value;
        grad = step.grad;
        report.history.push_back(value);
        if (stalled >= options.stall_iterations) {
            ++report.iterations;
            report.stop_reason = "no further decrease";
            break;
        }
    }
    if (report.stop_reason.empty()) report.stop_reason = "iteration limit";
    report.gradient_norm = projected_gradient(x, grad, options).norm();
    report.x = x;
    report.value = value;
    return report;
}

} // namespace cool
