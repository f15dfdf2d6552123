#include <cool/covariance.hpp>
#include <cool/errors.hpp>
#include <cool/fock.hpp>

#include <gtest/gtest.h>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <random>

using namespace cool;

namespace {

const std::vector<double> pulse_a{1.78, 1.45, 2.44, 1.61, 0.195};
const std::vector<double> pulse_b{2.76, 0.474, 3.73, 0.78, 2.59};

ControlPulse uniform(const std::vector<double>& g, double tau)
{
    return ControlPulse::uniform(std::span<const double>(g), tau);
}

DensityMatrix random_pure(const FockSystem& s, std::mt19937_64& rng, Eigen::Index levels)
{
    std::normal_distribution<double> n;
    CVector psi = CVector::Zero(s.dim());
    for (Eigen::Index i = 0; i < levels; ++i) {
        for (Eigen::Index j = 0; j < levels; ++j) psi(i * s.cutoff_aux() + j) = Complex(n(rng), n(rng));
    }
    psi.normalize();
    return DensityMatrix(psi * psi.adjoint(), Space::product);
}

double trace_distance(const CMatrix& a, const CMatrix& b)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a - b);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Complex first_moment(const FockSystem& s, const DensityMatrix& rho)
{
    return (rho.matrix() * CMatrix(s.a().cast<Complex>())).trace();
}

// The first t periods of `pulse`.
ControlPulse prefix(const ControlPulse& pulse, double t)
{
    std::vector<Segment> out;
    double start = 0.0;
    for (const Segment& s : pulse.channel(0)) {
        const double d = std::min(s.duration, t - start);
        if (d <= 1e-15) break;
        out.push_back({s.g, d});
        start += s.duration;
    }
    return ControlPulse({out});
}

} // namespace

TEST(System, Ladder)
{
    const Eigen::SparseMatrix<double> a = ladder(3);
    EXPECT_EQ(a.nonZeros(), 2);
    EXPECT_DOUBLE_EQ(a.coeff(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(a.coeff(1, 2), std::sqrt(2.0));
}

TEST(System, Dimensions)
{
    const FockSystem s = build_system();
    EXPECT_EQ(s.dim(), 625);
    for (Eigen::Index i = 0; i < 25; ++i) EXPECT_EQ(s.n_target()(i * 25 + 3), static_cast<double>(i));
    EXPECT_EQ(s.parity_sector(0).size() + s.parity_sector(1).size(), 625u);
    EXPECT_THROW(build_system(1, 5), DimensionError);
}

TEST(Initial, MixedTwelve)
{
    const FockSystem s = build_system(12, 4);
    const DensityMatrix rho = mixed_12_initial(s);
    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-14);
    EXPECT_NEAR(purity(partial_trace_target(s, rho)), 1.0 / 12.0, 1e-14);
    EXPECT_NEAR(expectation(rho, s.n_target()), 5.5, 1e-13);
    EXPECT_THROW(mixed_12_initial(build_system(10, 10)), DimensionError);
}

TEST(PartialTrace, ProductState)
{
    const FockSystem s = build_system(3, 2);
    CMatrix ra(3, 3), rb(2, 2);
    ra << 0.5, 0.1, 0, 0.1, 0.3, 0, 0, 0, 0.2;
    rb << 0.7, Complex(0, 0.2), Complex(0, -0.2), 0.3;
    const CMatrix prod = Eigen::kroneckerProduct(ra, rb);
    const DensityMatrix marginal = partial_trace_target(s, DensityMatrix(prod, Space::product));
    EXPECT_LT((marginal.matrix() - ra).norm(), 1e-15);
    EXPECT_EQ(marginal.space(), Space::target);
    EXPECT_THROW(partial_trace_target(s, marginal), SpaceError);
}

TEST(PartialTrace, BellState)
{
    const FockSystem s = build_system(2, 2);
    CVector psi = CVector::Zero(4);
    psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
    const DensityMatrix m = partial_trace_target(s, DensityMatrix(psi * psi.adjoint(), Space::product));
    EXPECT_NEAR(purity(m), 0.5, 1e-15);
    EXPECT_NEAR(purity(DensityMatrix(psi * psi.adjoint(), Space::product)), 1.0, 1e-15);
}

TEST(Validate, CatchesBadMatrices)
{
    CMatrix m = CMatrix::Identity(2, 2);
    EXPECT_THROW(DensityMatrix(m, Space::target).validate(), PhysicalityError);
    m *= 0.5;
    EXPECT_NO_THROW(DensityMatrix(m, Space::target).validate());
    m(0, 1) = 0.3;
    EXPECT_THROW(DensityMatrix(m, Space::target).validate(), PhysicalityError);
}

TEST(Closed, ZeroPulseKeepsMarginal)
{
    const FockSystem s = build_system(12, 6);
    const DensityMatrix rho0 = mixed_12_initial(s);
    const DensityMatrix rho = evolve_closed(s, ControlPulse::constant(0.0, 0.37), rho0);
    EXPECT_LT((partial_trace_target(s, rho).matrix() - partial_trace_target(s, rho0).matrix()).norm(), 1e-12);
    EXPECT_THROW(evolve_closed(s, ControlPulse::constant(0.0, 1.0, 2), rho0), UnsupportedError);
}

TEST(Closed, PublishedSwapPulses)
{
    const FockSystem s = build_system(25, 25);
    EXPECT_NEAR(swap_purity(s, uniform(pulse_a, 1.0)), 0.999977, 2e-4);
    EXPECT_NEAR(swap_purity(s, uniform(pulse_b, 0.7)), 0.999991, 2e-4);
}

TEST(Closed, ChebyshevMatchesEigendecomposition)
{
    const FockSystem s = build_system(16, 16);
    const SwapPropagator prop(s);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> g(5);
        for (double& x : g) x = u(rng);
        const double tau = 0.5 + 0.2 * trial;
        EXPECT_NEAR(prop.purity(g, tau), swap_purity(s, uniform(g, tau)), 1e-10);
    }
}

TEST(Closed, UnitarityAndTrace)
{
    const FockSystem s = build_system(10, 10);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
        const DensityMatrix rho0 = random_pure(s, rng, 3);
        const std::vector<double> g{u(rng), u(rng), u(rng)};
        const DensityMatrix rho = evolve_closed(s, uniform(g, 0.8), rho0);
        EXPECT_NEAR(purity(rho), 1.0, 1e-9);
        EXPECT_NEAR(rho.trace().real(), 1.0, 1e-8);
    }
}

TEST(Closed, RotatingWaveConservesExcitations)
{
    const FockSystem s = build_system(14, 14);
    const DensityMatrix rho0 = mixed_12_initial(s);
    const RVector total = s.n_target() + s.n_aux();
    const double g = units::omega_to_pulse(0.01);
    const DensityMatrix rho = evolve_closed(s, ControlPulse::constant(g, 1.0), rho0);
    EXPECT_NEAR(expectation(rho, total), expectation(rho0, total), 1e-3 * expectation(rho0, total));
}

TEST(Closed, CutoffConvergence)
{
    const double p25 = swap_purity(build_system(25, 25), uniform(pulse_a, 1.0));
    const double p30 = swap_purity(build_system(30, 30), uniform(pulse_a, 1.0));
    EXPECT_LE(std::abs(p25 - p30), 5e-5);
}

TEST(Lindblad, ClosedLimitMatchesUnitary)
{
    const FockSystem s = build_system(8, 8);
    const ModelParams p = make_params(0.0, 0.0, {{0.0, 0.0}});
    std::mt19937_64 rng(8);
    const DensityMatrix rho0 = random_pure(s, rng, 2);
    const ControlPulse pulse = uniform({0.3, -0.2}, 0.5);
    LindbladOptions opt;
    opt.truncation_threshold = 1e-3;
    const LindbladResult r = evolve_lindblad(s, p, pulse, rho0, opt);
    const DensityMatrix u = evolve_closed(s, pulse, rho0);
    EXPECT_LT(trace_distance(r.final_state.matrix(), u.matrix()), 1e-8);
}

TEST(Lindblad, ThermalIsStationary)
{
    const FockSystem s = build_system(12, 6);
    const ModelParams p = make_params(1e-2, 0.5, {{0.0, 0.0}});
    LindbladOptions opt;
    opt.sample_times = {0.25, 0.5, 0.75};
    opt.truncation_threshold = 1e-4;
    const DensityMatrix rho0 = thermal_state(s, 0.5, 0.0);
    const LindbladResult r = evolve_lindblad(s, p, ControlPulse::constant(0.0, 1.0), rho0, opt);
    const double n0 = expectation(rho0, s.n_target());
    for (const TrajectoryPoint& t : r.trajectory) EXPECT_NEAR(t.n_target, n0, 1e-8);
    EXPECT_NEAR(r.final_state.trace().real(), 1.0, 1e-8);
}

TEST(Lindblad, MatchesCovarianceOnRandomPulse)
{
    const FockSystem s = build_system(12, 12);
    const ModelParams p = make_params(1e-2, 0.5, {{0.1, 0.0}});
    const ControlPulse pulse = uniform({0.41, -0.27, 0.35}, 0.9);
    const DensityMatrix rho0 = thermal_state(s, 0.5, 0.0);
    LindbladOptions opt;
    for (int k = 1; k <= 20; ++k) opt.sample_times.push_back(0.9 * k / 20.0);
    opt.truncation_threshold = 1e-4;
    const LindbladResult r = evolve_lindblad(s, p, pulse, rho0, opt);
    ASSERT_EQ(r.trajectory.size(), 20u);
    for (const TrajectoryPoint& t : r.trajectory) {
        const double n = mean_occupation(propagate_final(p, prefix(pulse, t.time), moments(s, rho0)));
        EXPECT_NEAR(t.n_target, n, 1e-3 * n) << "t = " << t.time;
    }
    EXPECT_LT(std::abs(first_moment(s, r.final_state)), 1e-8);
}

TEST(Lindblad, Guards)
{
    const FockSystem s = build_system(6, 6);
    const DensityMatrix rho0 = thermal_state(s, 0.5, 0.0);
    const ModelParams two = make_params(0, 0.5, {{0, 0}, {0, 0}});
    EXPECT_THROW(evolve_lindblad(s, two, ControlPulse::constant(0.0, 1.0, 2), rho0), UnsupportedError);
    const ModelParams hot = make_params(1e-2, 5.0, {{0.1, 0.0}});
    EXPECT_THROW(evolve_lindblad(s, hot, ControlPulse::constant(0.0, 1.0), rho0), DomainError);
    // a strong coupling pumps population into the top level
    const ModelParams p = make_params(0.0, 0.5, {{0.0, 0.0}});
    EXPECT_THROW(evolve_lindblad(s, p, ControlPulse::constant(4.0, 2.0), rho0), TruncationError);
}
