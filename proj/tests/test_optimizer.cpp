#include <cool/covariance.hpp>
#include <cool/errors.hpp>
#include <cool/minimize.hpp>
#include <cool/optimizer.hpp>

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include <random>

using namespace cool;

namespace {

ModelParams fig2_params()
{
    return make_params(1e-6, 100.0, {{1.35e-3, 0.0}});
}

RVector vec(std::initializer_list<double> xs)
{
    RVector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

} // namespace

TEST(Minimizer, ConvexQuadratic)
{
    const int n = 8;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    RMatrix m(n, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = z(rng);
    const RMatrix h = m * m.transpose() + RMatrix::Identity(n, n);
    RVector b(n);
    for (Eigen::Index i = 0; i < n; ++i) b(i) = z(rng);
    const RVector x_star = h.ldlt().solve(b);
    const ValueGradient f = [&](const RVector& x, RVector* g) {
        if (g) *g = h * x - b;
        return 0.5 * x.dot(h * x) - b.dot(x);
    };
    MinimizerOptions opt;
    opt.lower = -100;
    opt.upper = 100;
    opt.wolfe_c2 = 0.01; // finite termination needs near-exact line searches
    const MinimizerReport r = minimize_bfgs(f, RVector::Zero(n), opt);
    EXPECT_LE(r.iterations, n + 5);
    EXPECT_LT((r.x - x_star).norm(), 1e-6 * x_star.norm());
}

TEST(Minimizer, HistoryIsMonotone)
{
    const ValueGradient rosen = [](const RVector& x, RVector* g) {
        const double a = 1 - x(0), b = x(1) - x(0) * x(0);
        if (g) *g = vec({-2 * a - 400 * x(0) * b, 200 * b});
        return a * a + 100 * b * b;
    };
    const MinimizerReport r = minimize_bfgs(rosen, vec({-1.2, 1.0}), {});
    ASSERT_FALSE(r.history.empty());
    for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1]);
    EXPECT_NEAR(r.x(0), 1.0, 1e-5);
    EXPECT_NEAR(r.x(1), 1.0, 1e-5);
}

TEST(Minimizer, BoxIsRespected)
{
    // linear objective: minimum sits on the lower corner
    const ValueGradient f = [](const RVector& x, RVector* g) {
        if (g) *g = RVector::Ones(x.size());
        return x.sum();
    };
    MinimizerOptions opt;
    opt.lower = -2.0;
    opt.upper = 3.0;
    const MinimizerReport r = minimize_bfgs(f, vec({0.5, 1.0, -1.0}), opt);
    EXPECT_LT((r.x - RVector::Constant(3, -2.0)).norm(), 1e-12);

    const ValueGradient rosen = [](const RVector& x, RVector* g) {
        const double a = 1 - x(0), b = x(1) - x(0) * x(0);
        if (g) *g = vec({-2 * a - 400 * x(0) * b, 200 * b});
        return a * a + 100 * b * b;
    };
    opt.lower = -1.5;
    opt.upper = 0.5;
    const MinimizerReport box = minimize_bfgs(rosen, vec({-1.2, 0.4}), opt);
    EXPECT_NEAR(box.x(0), 0.5, 1e-6);
    EXPECT_NEAR(box.x(1), 0.25, 1e-4);
}

TEST(Objective, SwapValue)
{
    const Objective o = Objective::swap(5, 1.0);
    EXPECT_NEAR(evaluate(o, vec({1.78, 1.45, 2.44, 1.61, 0.195})), -0.999977, 2e-4);
    EXPECT_THROW(evaluate(o, vec({1, 2, 3})), DimensionError);
    EXPECT_THROW(evaluate(o, vec({1, 2, 3, 4, 6})), DomainError);
}

TEST(Objective, ZeroPulseGivesThermalOccupation)
{
    const Objective o = Objective::occupation(fig2_params(), 10, 0.6);
    EXPECT_NEAR(evaluate(o, RVector::Zero(10)), 100.0, 1e-8);
    const RVector g = RVector::LinSpaced(10, -2.0, 3.0);
    EXPECT_EQ(evaluate(o, g), evaluate(o, g));
}

TEST(Objective, WithTimeAndSegments)
{
    const Objective o = Objective::occupation(fig2_params(), 4, 1.0).with_total_time(0.7).with_segments(6);
    EXPECT_EQ(o.dimension(), 6u);
    EXPECT_DOUBLE_EQ(o.total_time(), 0.7);
    EXPECT_THROW(o.with_total_time(0.0), ValidationError);
    EXPECT_THROW(o.with_segments(0), ValidationError);
    const ModelParams two = make_params(1e-6, 100.0, {{1e-3, 0.0}, {1e-3, 0.0}});
    EXPECT_EQ(Objective::occupation(two, 5, 1.0).dimension(), 10u);
}

TEST(Gradient, SwapIsStationaryAtZero)
{
    const Objective o = Objective::swap(5, 1.0, 14, 14);
    const RVector g = gradient(o, RVector::Zero(5));
    EXPECT_LT(g.norm(), 1e-6);
}

TEST(Gradient, SensitivityMatchesFiniteDifferences)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const ModelParams p = make_params(1e-5, 100.0, {{1e-2, 0.0}, {2e-2, 0.0}});
    const Objective o = Objective::occupation(p, 5, 0.9);
    for (int trial = 0; trial < 3; ++trial) {
        RVector x(10);
        for (Eigen::Index i = 0; i < 10; ++i) x(i) = u(rng);
        const RVector exact = gradient(o, x, GradientMethod::sensitivity);
        const RVector fd = gradient(o, x, GradientMethod::finite_difference);
        EXPECT_LT((exact - fd).norm(), 1e-4 * exact.norm());
    }
    EXPECT_THROW(gradient(Objective::swap(5, 1.0, 12, 12), RVector::Zero(5), GradientMethod::sensitivity),
                 UnsupportedError);
}

TEST(Optimize, FigureTwoBeatsThermal)
{
    const Objective o = Objective::occupation(fig2_params(), 5, 0.6);
    OptimizeOptions opt;
    opt.restarts = 3;
    const OptimizationResult r = optimize(o, opt);
    EXPECT_LT(r.best_value, 100.0);
    EXPECT_NEAR(r.best_value, evaluate(o, r.best_pulse.flat_values()), 1e-10 * r.best_value);
    EXPECT_EQ(r.restarts_used, 3u);
    EXPECT_EQ(r.restarts.size(), 3u);
    EXPECT_DOUBLE_EQ(r.total_time, 0.6);
    for (Eigen::Index i = 0; i < 5; ++i) EXPECT_LE(std::abs(r.best_pulse.flat_values()(i)), o.g_max());
}

TEST(Optimize, Reproducible)
{
    const Objective o = Objective::occupation(fig2_params(), 4, 0.7);
    OptimizeOptions opt;
    opt.restarts = 3;
    opt.seed = 42;
    const OptimizationResult a = optimize(o, opt);
    opt.jobs = 2;
    const OptimizationResult b = optimize(o, opt);
    EXPECT_EQ(a.best_value, b.best_value);
    EXPECT_EQ(a.best_restart, b.best_restart);
    EXPECT_EQ(a.best_pulse.flat_values(), b.best_pulse.flat_values());
}

TEST(Optimize, MoreRestartsNeverWorse)
{
    const Objective o = Objective::occupation(fig2_params(), 4, 0.7);
    OptimizeOptions opt;
    opt.restarts = 2;
    const double k = optimize(o, opt).best_value;
    opt.restarts = 4;
    EXPECT_LE(optimize(o, opt).best_value, k);
}

TEST(Optimize, SeededStreamIsPrefixStable)
{
    const Objective o = Objective::occupation(fig2_params(), 3, 0.7);
    const auto a = initial_points(o, 3, 7);
    const auto b = initial_points(o, 6, 7);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i], b[i]);
    EXPECT_EQ(a[0], RVector::Constant(3, 0.5));
    EXPECT_EQ(default_restarts(10), 20u);
    EXPECT_EQ(default_restarts(11), 50u);
}

TEST(Optimize, RefinementNeverWorse)
{
    const Objective coarse = Objective::occupation(fig2_params(), 3, 0.7);
    OptimizeOptions opt;
    opt.restarts = 2;
    const OptimizationResult r = optimize(coarse, opt);
    OptimizeOptions fine = opt;
    fine.restarts = 1;
    fine.warm_starts = {pulse_resample(r.best_pulse, 6).flat_values()};
    EXPECT_LE(optimize(coarse.with_segments(6), fine).best_value, r.best_value + 1e-10);
}

TEST(Optimize, WarmStartRunsFirst)
{
    const Objective o = Objective::occupation(fig2_params(), 3, 0.7);
    OptimizeOptions opt;
    opt.restarts = 1;
    opt.warm_starts = {RVector::Constant(3, 9.0)}; // clipped to g_max
    const OptimizationResult r = optimize(o, opt);
    EXPECT_EQ(r.restarts_used, 2u);
    opt.warm_starts = {RVector::Zero(2)};
    EXPECT_THROW(optimize(o, opt), DimensionError);
}

TEST(Optimize, StopValueIsDeterministic)
{
    const Objective o = Objective::occupation(fig2_params(), 4, 0.7);
    OptimizeOptions opt;
    opt.restarts = 6;
    opt.stop_value = 50.0;
    const OptimizationResult a = optimize(o, opt);
    EXPECT_EQ(a.restarts_used, 1u);
    opt.jobs = 3;
    const OptimizationResult b = optimize(o, opt);
    EXPECT_EQ(a.best_value, b.best_value);
    EXPECT_EQ(b.restarts_used, 1u);
}

TEST(Optimize, SingletonTimeGrid)
{
    const Objective o = Objective::occupation(fig2_params(), 3, 1.0);
    OptimizeOptions opt;
    opt.restarts = 2;
    const double tau[] = {0.7};
    const TimeSearch s = optimize_over_time(o, tau, opt);
    EXPECT_EQ(s.best().best_value, optimize(o.with_total_time(0.7), opt).best_value);
    EXPECT_THROW(optimize_over_time(o, std::span<const double>(), opt), ValidationError);
}
