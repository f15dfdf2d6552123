#include <cool/baselines.hpp>
#include <cool/errors.hpp>
#include <cool/experiment.hpp>

#include <gtest/gtest.h>

using namespace cool;

namespace {

ModelParams panel(double gamma_n_thermal, double kappa = 1e-3)
{
    return make_params(gamma_n_thermal / 100.0, 100.0, {{kappa, 0.0}});
}

} // namespace

TEST(Sideband, OptimumKappaForModerateHeating)
{
    const std::vector<double> kappas = log_grid(1e-4, 1.0, 49);
    const auto curve = sideband_curve(panel(1e-2), kappas);
    const auto best = std::min_element(curve.begin(), curve.end(),
                                       [](const SidebandPoint& a, const SidebandPoint& b) { return a.n_ss < b.n_ss; });
    EXPECT_GE(best->kappa, 0.1);
    EXPECT_LE(best->kappa, 1.0);
    // below the optimum more auxiliary damping always helps
    for (auto it = curve.begin(); it + 1 <= best; ++it) EXPECT_GT(it->n_ss, (it + 1)->n_ss);
}

TEST(Sideband, WeakCouplingLeavesThermal)
{
    EXPECT_NEAR(sideband_occupation(panel(1e-3), 1e-9), 100.0, 1e-3);
    EXPECT_TRUE(std::isinf(sideband_occupation(panel(1e-3), 0.6)));
}

TEST(Sideband, PointIsGridMinimum)
{
    const ModelParams p = panel(1e-3, 1e-2);
    const SidebandPoint s = sideband_point(p);
    for (double g : log_grid(1e-4, 1.0, 50)) EXPECT_LE(s.n_ss, sideband_occupation(p, g) * (1 + 1e-12));
    EXPECT_NEAR(sideband_occupation(p, s.g_opt), s.n_ss, 1e-12 * s.n_ss);
}

TEST(Sideband, GridRefinementStable)
{
    const ModelParams p = panel(1e-4, 3e-2);
    CouplingGrid fine;
    fine.points = 400;
    EXPECT_NEAR(sideband_point(p).n_ss, sideband_point(p, fine).n_ss, 5e-3 * sideband_point(p).n_ss);
}

TEST(Sideband, NoStablePoint)
{
    CouplingGrid g;
    g.g_min = 0.55;
    g.g_max = 1.0;
    g.points = 10;
    EXPECT_THROW(sideband_point(panel(1e-3), g), NoSteadyStateError);
}

TEST(Sideband, CurveOrderIndependentOfJobs)
{
    const std::vector<double> kappas{1e-1, 1e-3, 1e-2};
    const auto a = sideband_curve(panel(1e-3), kappas, {}, 1);
    const auto b = sideband_curve(panel(1e-3), kappas, {}, 3);
    ASSERT_EQ(a.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(a[i].kappa, kappas[i]);
        EXPECT_EQ(a[i].n_ss, b[i].n_ss);
    }
}

TEST(RwaSwap, Examples)
{
    const ModelParams closed = make_params(0.0, 100.0, {{0.0, 0.0}});
    const double weak = rwa_swap_cool(closed, 0.01);
    EXPECT_LE(weak, 1e-3 * 100.0);
    EXPECT_GT(rwa_swap_cool(closed, 0.3), weak);
    EXPECT_GT(rwa_swap_cool(make_params(1e-3, 100.0, {{0.0, 0.0}}), 0.01), weak);
}
