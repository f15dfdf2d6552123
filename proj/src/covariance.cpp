#include <cool/covariance.hpp>
#include <cool/errors.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cool {
namespace {

constexpr Complex I{0.0, 1.0};

void check_finite(const CMatrix& c, std::size_t segment)
{
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            const Complex v = c(i, j);
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
                throw DivergenceError(segment, "non-finite second moment");
            }
            if (std::abs(v) > divergence_limit) {
                std::ostringstream os;
                os << "second moment C(" << i << "," << j << ") reached " << std::abs(v);
                throw DivergenceError(segment, os.str());
            }
        }
    }
}

CMatrix van_loan_generator(const CMatrix& drift, const CMatrix& diffusion)
{
    const Eigen::Index d = drift.rows();
    CMatrix m = CMatrix::Zero(2 * d, 2 * d);
    m.topLeftCorner(d, d) = -drift;
    m.topRightCorner(d, d) = diffusion;
    m.bottomRightCorner(d, d) = drift.transpose();
    return m;
}

std::vector<double> couplings_at(const ControlPulse& pulse, double t)
{
    std::vector<double> g(pulse.num_channels());
    for (std::size_t c = 0; c < g.size(); ++c) g[c] = units::pulse_to_omega(pulse.value_at(c, t));
    return g;
}

void check_channels(const ModelParams& params, const ControlPulse& pulse)
{
    if (pulse.num_channels() != params.num_aux()) {
        throw DimensionError("pulse has " + std::to_string(pulse.num_channels()) +
                             " channels but the model has " + std::to_string(params.num_aux()) +
                             " auxiliaries");
    }
}

} // namespace

CovarianceState::CovarianceState(CMatrix matrix, double time)
    : matrix_(std::move(matrix)), time_(time)
{
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() % 2 != 0 || matrix_.rows() < 4) {
        throw DimensionError("covariance matrix must be square with even dimension >= 4");
    }
}

CMatrix build_drift(const ModelParams& params, std::span<const double> g)
{
    if (g.size() != params.num_aux()) {
        throw DimensionError("expected " + std::to_string(params.num_aux()) +
                             " coupling values, got " + std::to_string(g.size()));
    }
    const double w = params.omega();
    CMatrix a = CMatrix::Zero(params.dim(), params.dim());
    a(0, 0) = -I * w - params.gamma() / 2.0;
    a(1, 1) = I * w - params.gamma() / 2.0;
    for (std::size_t j = 0; j < params.num_aux(); ++j) {
        const auto b = static_cast<Eigen::Index>(2 + 2 * j);
        const double kappa = params.auxiliary(j).kappa;
        a(b, b) = -I * w - kappa / 2.0;
        a(b + 1, b + 1) = I * w - kappa / 2.0;
        a += g[j] * drift_derivative(params, j);
    }
    return a;
}

CMatrix drift_derivative(const ModelParams& params, std::size_t channel)
{
    if (channel >= params.num_aux()) throw DimensionError("no such auxiliary channel");
    CMatrix da = CMatrix::Zero(params.dim(), params.dim());
    const auto b = static_cast<Eigen::Index>(2 + 2 * channel);
    // d/dt (a, a†) gains -+ i g x_b; d/dt (b, b†) gains -+ i g x_a.
    da(0, b) = -I;
    da(0, b + 1) = -I;
    da(1, b) = I;
    da(1, b + 1) = I;
    da(b, 0) = -I;
    da(b, 1) = -I;
    da(b + 1, 0) = I;
    da(b + 1, 1) = I;
    return da;
}

CMatrix build_diffusion(const ModelParams& params)
{
    CMatrix g = CMatrix::Zero(params.dim(), params.dim());
    g(0, 1) = params.gamma() * (params.n_thermal() + 1.0);
    g(1, 0) = params.gamma() * params.n_thermal();
    for (std::size_t j = 0; j < params.num_aux(); ++j) {
        const auto b = static_cast<Eigen::Index>(2 + 2 * j);
        const auto& aux = params.auxiliary(j);
        g(b, b + 1) = aux.kappa * (aux.n_aux + 1.0);
        g(b + 1, b) = aux.kappa * aux.n_aux;
    }
    return g;
}

CovarianceState thermal_covariance(const ModelParams& params)
{
    CMatrix c = CMatrix::Zero(params.dim(), params.dim());
    c(0, 1) = params.n_thermal() + 1.0;
    c(1, 0) = params.n_thermal();
    for (std::size_t j = 0; j < params.num_aux(); ++j) {
        const auto b = static_cast<Eigen::Index>(2 + 2 * j);
        c(b, b + 1) = params.auxiliary(j).n_aux + 1.0;
        c(b + 1, b) = params.auxiliary(j).n_aux;
    }
    return CovarianceState(std::move(c), 0.0);
}

SegmentMap segment_map(const CMatrix& drift, const CMatrix& diffusion, double dt)
{
    const Eigen::Index d = drift.rows();
    const CMatrix e = (van_loan_generator(drift, diffusion) * units::radians(dt)).exp();
    SegmentMap map;
    map.phi = e.bottomRightCorner(d, d).transpose();
    map.q = map.phi * e.topRightCorner(d, d);
    return map;
}

CovarianceState propagate_segment(const CovarianceState& state, const CMatrix& drift,
                                  const CMatrix& diffusion, double dt, std::size_t segment_index)
{
    if (!(dt > 0.0)) throw DomainError("segment duration must be positive");
    if (drift.rows() != state.dim() || diffusion.rows() != state.dim()) {
        throw DimensionError("drift/diffusion dimension does not match the state");
    }
    CMatrix next = segment_map(drift, diffusion, dt).apply(state.matrix());
    check_finite(next, segment_index);
    return CovarianceState(std::move(next), state.time() + dt);
}

PulsePropagation propagate_pulse(const ModelParams& params, const ControlPulse& pulse,
                                 const CovarianceState& initial, int samples_per_period)
{
    check_channels(params, pulse);
    const CMatrix diffusion = build_diffusion(params);
    const double tau = pulse.total_time();
    const auto n_samples = static_cast<std::size_t>(
        std::max(1.0, std::ceil(static_cast<double>(std::max(samples_per_period, 1)) * tau)));

    auto sample = [&](const CovarianceState& s, double t) {
        TrajectoryPoint p;
        p.time = t;
        p.n_target = mean_occupation(s, 0);
        for (std::size_t j = 0; j < params.num_aux(); ++j) p.n_aux.push_back(mean_occupation(s, j + 1));
        return p;
    };

    const std::vector<double> breaks = pulse.breakpoints();
    std::vector<TrajectoryPoint> trajectory{sample(initial, initial.time())};
    CovarianceState state = initial;
    std::size_t next_sample = 1;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double t0 = breaks[k];
        const double t1 = breaks[k + 1];
        const CMatrix drift = build_drift(params, couplings_at(pulse, 0.5 * (t0 + t1)));
        double t = t0;
        // Sample points that fall strictly inside this interval.
        while (next_sample < n_samples) {
            const double ts = tau * static_cast<double>(next_sample) / static_cast<double>(n_samples);
            if (ts >= t1 - 1e-14 * tau) break;
            if (ts > t) {
                state = propagate_segment(state, drift, diffusion, ts - t, k);
                t = ts;
            }
            trajectory.push_back(sample(state, initial.time() + ts));
            ++next_sample;
        }
        state = propagate_segment(state, drift, diffusion, t1 - t, k);
    }
    state = CovarianceState(state.matrix(), initial.time() + tau);
    trajectory.push_back(sample(state, state.time()));
    return {std::move(state), std::move(trajectory)};
}

CovarianceState propagate_final(const ModelParams& params, const ControlPulse& pulse,
                                const CovarianceState& initial)
{
    check_channels(params, pulse);
    const CMatrix diffusion = build_diffusion(params);
    const std::vector<double> breaks = pulse.breakpoints();
    CovarianceState state = initial;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const CMatrix drift = build_drift(params, couplings_at(pulse, 0.5 * (breaks[k] + breaks[k + 1])));
        state = propagate_segment(state, drift, diffusion, breaks[k + 1] - breaks[k], k);
    }
    return CovarianceState(state.matrix(), initial.time() + pulse.total_time());
}

double mean_occupation(const CovarianceState& state, std::size_t mode)
{
    if (mode >= state.num_modes()) throw DimensionError("no such mode");
    const auto i = static_cast<Eigen::Index>(2 * mode);
    const Complex n = state(i + 1, i);
    if (std::abs(n.imag()) > 1e-8) {
        std::ostringstream os;
        os << "occupation of mode " << mode << " has imaginary part " << n.imag();
        throw PhysicalityError(os.str());
    }
    return n.real();
}

CovarianceState steady_state(const ModelParams& params, std::span<const double> g)
{
    const CMatrix drift = build_drift(params, g);
    const CMatrix diffusion = build_diffusion(params);
    Eigen::ComplexEigenSolver<CMatrix> es(drift, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const Complex ev = es.eigenvalues()(i);
        if (!(ev.real() < 0.0)) {
            std::ostringstream os;
            os << "drift is not Hurwitz: eigenvalue " << ev.real() << (ev.imag() < 0 ? " - " : " + ")
               << std::abs(ev.imag()) << "i";
            throw NoSteadyStateError(os.str());
        }
    }
    const Eigen::Index d = drift.rows();
    const CMatrix id = CMatrix::Identity(d, d);
    // Column-major vec: vec(A C) = (I ⊗ A) vec C, vec(C A^t) = (A ⊗ I) vec C.
    const CMatrix lyap = Eigen::kroneckerProduct(id, drift).eval() + Eigen::kroneckerProduct(drift, id).eval();
    const CVector rhs = -Eigen::Map<const CVector>(diffusion.data(), d * d);
    const Eigen::PartialPivLU<CMatrix> lu(lyap);
    CVector sol = lu.solve(rhs);
    sol += lu.solve(rhs - lyap * sol);
    CMatrix c = Eigen::Map<const CMatrix>(sol.data(), d, d);
    // The exact solution satisfies conj(C(i,j)) = C(j', i') with ' swapping
    // each (m, m†) pair; averaging with that image removes the round-off
    // that violates it.
    CMatrix mirror(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) mirror(i, j) = std::conj(c(j ^ 1, i ^ 1));
    }
    c = 0.5 * (c + mirror);

    const double residual = (drift * c + c * drift.transpose() + diffusion).norm();
    if (residual > 1e-10 * std::max(diffusion.norm(), 1e-300)) {
        std::ostringstream os;
        os << "steady-state residual " << residual << " exceeds tolerance";
        throw NoSteadyStateError(os.str());
    }
    return CovarianceState(std::move(c), 0.0);
}

ExpFrechet expm_frechet(const CMatrix& x, const CMatrix& e)
{
    const Eigen::Index n = x.rows();
    CMatrix block = CMatrix::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = x;
    block.bottomRightCorner(n, n) = x;
    block.topRightCorner(n, n) = e;
    const CMatrix ex = block.exp();
    return {ex.topLeftCorner(n, n), ex.topRightCorner(n, n)};
}

double final_occupation(const ModelParams& params, const RMatrix& values, double total_time,
                        RVector* gradient)
{
    const auto channels = static_cast<std::size_t>(values.rows());
    if (channels != params.num_aux()) {
        throw DimensionError("pulse channel count does not match the model");
    }
    if (!(total_time > 0.0)) throw DomainError("total time must be positive");
    const auto n_seg = static_cast<std::size_t>(values.cols());
    const double dt = units::radians(total_time / static_cast<double>(n_seg));
    const Eigen::Index d = params.dim();
    const CMatrix diffusion = build_diffusion(params);

    std::vector<CMatrix> generators(n_seg);
    std::vector<SegmentMap> maps(n_seg);
    std::vector<CMatrix> history(n_seg + 1);
    history[0] = thermal_covariance(params).matrix();

    std::vector<double> g(channels);
    for (std::size_t k = 0; k < n_seg; ++k) {
        for (std::size_t c = 0; c < channels; ++c) {
            g[c] = units::pulse_to_omega(values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)));
        }
        generators[k] = van_loan_generator(build_drift(params, g), diffusion) * dt;
        const CMatrix e = generators[k].exp();
        maps[k].phi = e.bottomRightCorner(d, d).transpose();
        maps[k].q = e.topRightCorner(d, d); // F12; q = phi * F12 below
        history[k + 1] = maps[k].phi * history[k] * maps[k].phi.transpose() + maps[k].phi * maps[k].q;
        check_finite(history[k + 1], k);
    }
    const double value = history[n_seg](1, 0).real();
    if (gradient == nullptr) return value;

    gradient->setZero(static_cast<Eigen::Index>(channels * n_seg));
    std::vector<CMatrix> directions;
    for (std::size_t c = 0; c < channels; ++c) {
        const CMatrix da = drift_derivative(params, c) * units::pulse_coupling_scale;
        CMatrix dm = CMatrix::Zero(2 * d, 2 * d);
        dm.topLeftCorner(d, d) = -da * dt;
        dm.bottomRightCorner(d, d) = da.transpose() * dt;
        directions.push_back(std::move(dm));
    }

    // Adjoint: J = Re sum(lambda .* C_k) holds at every k.
    CMatrix lambda = CMatrix::Zero(d, d);
    lambda(1, 0) = 1.0;
    for (std::size_t k = n_seg; k-- > 0;) {
        const CMatrix& phi = maps[k].phi;
        const CMatrix& f12 = maps[k].q;
        const CMatrix& prev = history[k];
        for (std::size_t c = 0; c < channels; ++c) {
            const CMatrix dexp = expm_frechet(generators[k], directions[c]).derivative;
            const CMatrix dphi = dexp.bottomRightCorner(d, d).transpose();
            const CMatrix df12 = dexp.topRightCorner(d, d);
            const CMatrix dc = dphi * prev * phi.transpose() + phi * prev * dphi.transpose() +
                               dphi * f12 + phi * df12;
            (*gradient)(static_cast<Eigen::Index>(c * n_seg + k)) = lambda.cwiseProduct(dc).sum().real();
        }
        lambda = phi.transpose() * lambda * phi;
    }
    return value;
}

} // namespace cool
