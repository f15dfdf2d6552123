#include <cool/fock.hpp>
#include <cool/errors.hpp>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace cool {
namespace {

constexpr Complex I{0.0, 1.0};

SparseMatrix identity(Eigen::Index n)
{
    SparseMatrix id(n, n);
    id.setIdentity();
    return id;
}

void require_single_channel(const ControlPulse& pulse)
{
    if (pulse.num_channels() != 1) {
        throw UnsupportedError("Fock simulation supports a single auxiliary channel only");
    }
}

struct SectorPropagator
{
    std::vector<CMatrix> unitaries; // one per parity sector
};

// exp(-i H(g) dt) restricted to each parity sector, from the eigendecomposition
// of the real-symmetric sector Hamiltonian.
SectorPropagator sector_propagator(const FockSystem& system, double g_omega, double dt_radians)
{
    const RMatrix h = RMatrix(system.hamiltonian(g_omega));
    SectorPropagator out;
    for (int parity = 0; parity < 2; ++parity) {
        const auto& idx = system.parity_sector(parity);
        const RMatrix hp = h(idx, idx);
        if (!hp.isApprox(hp.transpose(), 1e-14)) {
            throw Error("internal: sector Hamiltonian is not symmetric");
        }
        Eigen::SelfAdjointEigenSolver<RMatrix> es(hp);
        if (es.info() != Eigen::Success) throw Error("internal: eigendecomposition failed");
        const CVector phases = (-I * dt_radians * es.eigenvalues().cast<Complex>()).array().exp();
        const CMatrix v = es.eigenvectors().cast<Complex>();
        CMatrix u = v * phases.asDiagonal() * v.transpose();
        const double err = (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).norm();
        if (err > 1e-9) {
            std::ostringstream os;
            os << "internal: segment propagator not unitary (error " << err << ")";
            throw Error(os.str());
        }
        out.unitaries.push_back(std::move(u));
    }
    return out;
}

CMatrix reduced_target(const FockSystem& system, const CMatrix& states, int levels)
{
    const Eigen::Index nt = system.cutoff_target();
    const Eigen::Index nb = system.cutoff_aux();
    CMatrix rho = CMatrix::Zero(nt, nt);
    for (Eigen::Index c = 0; c < states.cols(); ++c) {
        // Column-major view: m(k, i) = psi(i * nb + k).
        const Eigen::Map<const CMatrix> m(states.col(c).data(), nb, nt);
        rho.noalias() += m.transpose() * m.conjugate();
    }
    return rho / static_cast<double>(levels);
}

CMatrix swap_inputs(const FockSystem& system, int levels)
{
    if (system.cutoff_target() < levels) {
        throw DimensionError("target cutoff " + std::to_string(system.cutoff_target()) +
                             " cannot hold " + std::to_string(levels) + " levels");
    }
    CMatrix psi = CMatrix::Zero(system.dim(), levels);
    for (int n = 0; n < levels; ++n) psi(n * system.cutoff_aux(), n) = 1.0;
    return psi;
}

double top_population(const FockSystem& system, const CMatrix& rho, bool target)
{
    const Eigen::Index nt = system.cutoff_target();
    const Eigen::Index nb = system.cutoff_aux();
    double p = 0.0;
    if (target) {
        for (Eigen::Index k = 0; k < nb; ++k) p += rho((nt - 1) * nb + k, (nt - 1) * nb + k).real();
    } else {
        for (Eigen::Index i = 0; i < nt; ++i) p += rho(i * nb + nb - 1, i * nb + nb - 1).real();
    }
    return p;
}

} // namespace

SparseMatrix FockSystem::hamiltonian(double g) const
{
    SparseMatrix h = g * coupling_;
    for (Eigen::Index i = 0; i < dim(); ++i) h.coeffRef(i, i) += free_(i);
    h.makeCompressed();
    return h;
}

FockSystem build_system(Eigen::Index cutoff_target, Eigen::Index cutoff_aux)
{
    if (cutoff_target < 2 || cutoff_aux < 2) {
        throw DimensionError("Fock cutoffs must be at least 2");
    }
    FockSystem s;
    s.nt_ = cutoff_target;
    s.nb_ = cutoff_aux;
    const SparseMatrix at = ladder(cutoff_target);
    const SparseMatrix ab = ladder(cutoff_aux);
    s.a_ = Eigen::kroneckerProduct(at, identity(cutoff_aux));
    s.b_ = Eigen::kroneckerProduct(identity(cutoff_target), ab);
    s.xa_ = SparseMatrix(s.a_ + SparseMatrix(s.a_.transpose()));
    s.xb_ = SparseMatrix(s.b_ + SparseMatrix(s.b_.transpose()));
    s.coupling_ = s.xa_ * s.xb_;
    s.coupling_.prune(0.0);
    s.coupling_.makeCompressed();

    const Eigen::Index dim = s.dim();
    s.free_.resize(dim);
    s.n_a_.resize(dim);
    s.n_b_.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const Eigen::Index na = i / cutoff_aux;
        const Eigen::Index nb = i % cutoff_aux;
        s.n_a_(i) = static_cast<double>(na);
        s.n_b_(i) = static_cast<double>(nb);
        s.free_(i) = units::omega * static_cast<double>(na + nb);
        ((na + nb) % 2 == 0 ? s.even_ : s.odd_).push_back(i);
    }
    return s;
}

DensityMatrix::DensityMatrix(CMatrix matrix, Space space)
    : matrix_(std::move(matrix)), space_(space)
{
    if (matrix_.rows() != matrix_.cols()) throw DimensionError("density matrix must be square");
}

void DensityMatrix::validate(double trace_tol, double herm_tol, double eig_tol) const
{
    const Complex tr = matrix_.trace();
    if (std::abs(tr - 1.0) > trace_tol) {
        throw PhysicalityError("density matrix trace deviates from 1 by " + std::to_string(std::abs(tr - 1.0)));
    }
    const double herm = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > herm_tol) throw PhysicalityError("density matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(matrix_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -eig_tol) {
        throw PhysicalityError("density matrix has a negative eigenvalue");
    }
}

DensityMatrix mixed_12_initial(const FockSystem& system)
{
    constexpr int levels = 12;
    const CMatrix psi = swap_inputs(system, levels);
    return DensityMatrix(psi * psi.adjoint() / static_cast<double>(levels), Space::product);
}

DensityMatrix thermal_state(const FockSystem& system, double n_target, double n_aux)
{
    auto populations = [](Eigen::Index dim, double n) {
        RVector p(dim);
        const double q = n / (n + 1.0);
        for (Eigen::Index k = 0; k < dim; ++k) p(k) = std::pow(q, static_cast<double>(k));
        if (n == 0.0) p.tail(dim - 1).setZero();
        return RVector(p / p.sum());
    };
    const RVector pt = populations(system.cutoff_target(), n_target);
    const RVector pb = populations(system.cutoff_aux(), n_aux);
    CVector diag(system.dim());
    for (Eigen::Index i = 0; i < system.dim(); ++i) {
        diag(i) = pt(i / system.cutoff_aux()) * pb(i % system.cutoff_aux());
    }
    return DensityMatrix(CMatrix(diag.asDiagonal()), Space::product);
}

DensityMatrix partial_trace_target(const FockSystem& system, const DensityMatrix& rho)
{
    if (rho.space() != Space::product || rho.matrix().rows() != system.dim()) {
        throw SpaceError("partial trace needs a product-space density matrix");
    }
    const Eigen::Index nt = system.cutoff_target();
    const Eigen::Index nb = system.cutoff_aux();
    CMatrix out = CMatrix::Zero(nt, nt);
    for (Eigen::Index i = 0; i < nt; ++i) {
        for (Eigen::Index j = 0; j < nt; ++j) {
            out(i, j) = rho.matrix().block(i * nb, j * nb, nb, nb).trace();
        }
    }
    return DensityMatrix(std::move(out), Space::target);
}

double purity(const DensityMatrix& rho)
{
    return (rho.matrix() * rho.matrix()).trace().real();
}

double expectation(const DensityMatrix& rho, const RVector& diagonal_op)
{
    return (rho.matrix().diagonal().real().array() * diagonal_op.array()).sum();
}

CovarianceState moments(const FockSystem& system, const DensityMatrix& rho)
{
    if (rho.space() != Space::product) throw SpaceError("moments need a product-space density matrix");
    const SparseMatrix at = system.a().transpose();
    const SparseMatrix bt = system.b().transpose();
    const std::array<const SparseMatrix*, 4> ops{&system.a(), &at, &system.b(), &bt};
    CMatrix c(4, 4);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const SparseMatrix m = *ops[static_cast<std::size_t>(i)] * *ops[static_cast<std::size_t>(j)];
            Complex acc = 0.0;
            for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
                for (SparseMatrix::InnerIterator it(m, k); it; ++it) acc += it.value() * rho.matrix()(it.col(), it.row());
            }
            c(i, j) = acc;
        }
    }
    return CovarianceState(std::move(c), 0.0);
}

DensityMatrix evolve_closed(const FockSystem& system, const ControlPulse& pulse, const DensityMatrix& rho0)
{
    require_single_channel(pulse);
    if (rho0.space() != Space::product || rho0.matrix().rows() != system.dim()) {
        throw SpaceError("closed evolution needs a product-space density matrix");
    }
    CMatrix rho = rho0.matrix();
    for (const Segment& seg : pulse.channel(0)) {
        const SectorPropagator prop =
            sector_propagator(system, units::pulse_to_omega(seg.g), units::radians(seg.duration));
        CMatrix u = CMatrix::Zero(system.dim(), system.dim());
        for (int p = 0; p < 2; ++p) {
            const auto& idx = system.parity_sector(p);
            u(idx, idx) = prop.unitaries[static_cast<std::size_t>(p)];
        }
        rho = u * rho * u.adjoint();
    }
    return DensityMatrix(std::move(rho), Space::product);
}

double swap_purity(const FockSystem& system, const ControlPulse& pulse)
{
    require_single_channel(pulse);
    constexpr int levels = 12;
    CMatrix psi = swap_inputs(system, levels);
    for (const Segment& seg : pulse.channel(0)) {
        const SectorPropagator prop =
            sector_propagator(system, units::pulse_to_omega(seg.g), units::radians(seg.duration));
        for (int p = 0; p < 2; ++p) {
            const auto& idx = system.parity_sector(p);
            const CMatrix block = psi(idx, Eigen::all);
            psi(idx, Eigen::all) = prop.unitaries[static_cast<std::size_t>(p)] * block;
        }
    }
    const CMatrix rho = reduced_target(system, psi, levels);
    return (rho * rho).trace().real();
}

CMatrix expmv_chebyshev(const SparseMatrix& h, double t, const CMatrix& v)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index k = 0; k < h.outerSize(); ++k) {
        double center = 0.0;
        double radius = 0.0;
        for (SparseMatrix::InnerIterator it(h, k); it; ++it) {
            if (it.row() == it.col()) center = it.value();
            else radius += std::abs(it.value());
        }
        lo = std::min(lo, center - radius);
        hi = std::max(hi, center + radius);
    }
    const double c = 0.5 * (hi + lo);
    const double r = 0.5 * (hi - lo);
    const Complex shift = std::exp(-I * c * t);
    const double x = r * t;
    if (r <= 0.0 || x < 1e-300) return shift * v;

    // exp(-i x s) = J0(x) + 2 sum_k (-i)^k Jk(x) Tk(s) for s in [-1, 1].
    auto scaled = [&](const CMatrix& w) -> CMatrix { return (h * w - c * w) / r; };
    CMatrix w_prev = v;
    CMatrix w_cur = scaled(v);
    CMatrix acc = std::cyl_bessel_j(0.0, x) * v;
    Complex phase = -I;
    acc += 2.0 * phase * std::cyl_bessel_j(1.0, x) * w_cur;
    int small = 0;
    for (int k = 2;; ++k) {
        const double jk = std::cyl_bessel_j(static_cast<double>(k), x);
        CMatrix w_next = 2.0 * scaled(w_cur) - w_prev;
        phase *= -I;
        acc += 2.0 * phase * jk * w_next;
        w_prev = std::move(w_cur);
        w_cur = std::move(w_next);
        if (k > x && std::abs(jk) < 1e-17) {
            if (++small >= 3) break;
        } else {
            small = 0;
        }
    }
    return shift * acc;
}

SwapPropagator::SwapPropagator(const FockSystem& system, int levels)
    : system_(&system), levels_(levels)
{
    swap_inputs(system, levels);
}

CMatrix SwapPropagator::evolve(std::span<const double> g_values, double total_time) const
{
    if (g_values.empty()) throw DimensionError("empty pulse");
    const double dt = units::radians(total_time / static_cast<double>(g_values.size()));
    CMatrix psi = swap_inputs(*system_, levels_);
    for (double g : g_values) {
        psi = expmv_chebyshev(system_->hamiltonian(units::pulse_to_omega(g)), dt, psi);
    }
    return psi;
}

double SwapPropagator::purity(std::span<const double> g_values, double total_time) const
{
    const CMatrix rho = reduced_target(*system_, evolve(g_values, total_time), levels_);
    return (rho * rho).trace().real();
}

LindbladResult evolve_lindblad(const FockSystem& system, const ModelParams& params,
                               const ControlPulse& pulse, const DensityMatrix& rho0,
                               const LindbladOptions& options)
{
    namespace odeint = boost::numeric::odeint;
    require_single_channel(pulse);
    if (params.num_aux() != 1) throw UnsupportedError("Lindblad simulation supports one auxiliary");
    if (rho0.space() != Space::product || rho0.matrix().rows() != system.dim()) {
        throw SpaceError("Lindblad evolution needs a product-space density matrix");
    }
    auto fits = [](double n, Eigen::Index cutoff) {
        return n + 5.0 * std::sqrt(n) < static_cast<double>(cutoff);
    };
    if (!fits(params.n_thermal(), system.cutoff_target()) ||
        !fits(params.auxiliary(0).n_aux, system.cutoff_aux())) {
        throw DomainError("thermal occupation too large for the Fock cutoffs");
    }

    const Eigen::Index dim = system.dim();
    const double gamma = params.gamma();
    const double nt = params.n_thermal();
    const double kappa = params.auxiliary(0).kappa;
    const double nb = params.auxiliary(0).n_aux;

    struct Channel
    {
        SparseMatrix op;
        SparseMatrix op_t;
        double rate;
    };
    std::vector<Channel> channels;
    auto add = [&](const SparseMatrix& op, double rate) {
        if (rate > 0.0) channels.push_back({op, SparseMatrix(op.transpose()), rate});
    };
    add(system.a(), gamma * (nt + 1.0));
    add(SparseMatrix(system.a().transpose()), gamma * nt);
    add(system.b(), kappa * (nb + 1.0));
    add(SparseMatrix(system.b().transpose()), kappa * nb);

    // Half the anti-commutator weights; every L†L here is diagonal.
    RVector damp = RVector::Zero(dim);
    for (const auto& ch : channels) {
        const SparseMatrix ltl = ch.op_t * ch.op;
        damp += 0.5 * ch.rate * RVector(ltl.diagonal());
    }

    const RMatrix damp_pairs = damp.replicate(1, dim) + damp.transpose().replicate(dim, 1);

    using State = std::vector<Complex>;
    SparseMatrix h;
    CMatrix work(dim, dim);
    auto rhs = [&](const State& x, State& dxdt, double) {
        const Eigen::Map<const CMatrix> rho(x.data(), dim, dim);
        Eigen::Map<CMatrix> out(dxdt.data(), dim, dim);
        work.noalias() = h * rho;
        out.noalias() = rho * h;
        out -= work;
        out *= I;
        out.array() -= rho.array() * damp_pairs.array();
        for (const auto& ch : channels) {
            work.noalias() = ch.rate * (ch.op * rho);
            out.noalias() += work * ch.op_t;
        }
    };

    // Event grid: pulse breakpoints plus requested sample times.
    std::vector<double> events = pulse.breakpoints();
    for (double t : options.sample_times) {
        if (t < 0.0 || t > pulse.total_time() * (1.0 + 1e-12)) {
            throw DomainError("sample time outside the pulse");
        }
        events.push_back(std::min(t, pulse.total_time()));
    }
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end(),
                             [&](double a, double b) { return std::abs(a - b) <= 1e-13 * pulse.total_time(); }),
                 events.end());

    auto is_sample = [&](double t) {
        if (std::abs(t - pulse.total_time()) <= 1e-13 * pulse.total_time()) return true;
        return std::any_of(options.sample_times.begin(), options.sample_times.end(),
                           [&](double s) { return std::abs(s - t) <= 1e-13 * pulse.total_time(); });
    };

    State x(rho0.matrix().data(), rho0.matrix().data() + dim * dim);
    std::vector<TrajectoryPoint> trajectory;
    auto check_and_sample = [&](double t) {
        const Eigen::Map<const CMatrix> rho(x.data(), dim, dim);
        const double top_t = top_population(system, rho, true);
        const double top_b = top_population(system, rho, false);
        if (top_t > options.truncation_threshold || top_b > options.truncation_threshold) {
            std::ostringstream os;
            os << "top Fock level population " << std::max(top_t, top_b) << " at t=" << t
               << " exceeds " << options.truncation_threshold;
            throw TruncationError(os.str());
        }
        if (std::abs(rho.trace() - 1.0) > 1e-8) {
            throw PhysicalityError("master-equation trace drifted by " + std::to_string(std::abs(rho.trace() - 1.0)));
        }
        if (is_sample(t)) {
            TrajectoryPoint p;
            p.time = t;
            p.n_target = (rho.diagonal().real().array() * system.n_target().array()).sum();
            p.n_aux.push_back((rho.diagonal().real().array() * system.n_aux().array()).sum());
            trajectory.push_back(std::move(p));
        }
    };

    check_and_sample(0.0);
    for (std::size_t k = 0; k + 1 < events.size(); ++k) {
        const double t0 = events[k];
        const double t1 = events[k + 1];
        h = system.hamiltonian(units::pulse_to_omega(pulse.value_at(0, 0.5 * (t0 + t1))));
        auto stepper = odeint::make_controlled(options.abs_tol, options.rel_tol,
                                               odeint::runge_kutta_dopri5<State>());
        const double span = units::radians(t1 - t0);
        odeint::integrate_adaptive(stepper, rhs, x, 0.0, span, std::min(1e-3, span));
        check_and_sample(t1);
    }

    CMatrix rho = Eigen::Map<const CMatrix>(x.data(), dim, dim);
    return {DensityMatrix(std::move(rho), Space::product), std::move(trajectory)};
}

} // namespace cool
