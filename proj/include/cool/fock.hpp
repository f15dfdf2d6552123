#pragma once

#include <cool/covariance.hpp>
#include <cool/model.hpp>
#include <cool/types.hpp>

#include <Eigen/SparseCore>

#include <vector>

namespace cool {

using SparseMatrix = Eigen::SparseMatrix<double>;
using CSparseMatrix = Eigen::SparseMatrix<Complex>;

/// Annihilation operator truncated to `dim` Fock states.
template <class Scalar = double>
Eigen::SparseMatrix<Scalar> ladder(Eigen::Index dim)
{
    Eigen::SparseMatrix<Scalar> a(dim, dim);
    a.reserve(Eigen::VectorXi::Constant(dim, 1));
    for (Eigen::Index n = 1; n < dim; ++n) a.insert(n - 1, n) = Scalar(std::sqrt(static_cast<double>(n)));
    a.makeCompressed();
    return a;
}

/// Target ⊗ auxiliary Fock space with the operators of the frequency-converted
/// Hamiltonian H(g) = omega (a†a + b†b) + g x_a x_b. Product index is
/// n_target * cutoff_aux + n_aux. Immutable once built.
class FockSystem
{
public:
    Eigen::Index cutoff_target() const noexcept { return nt_; }
    Eigen::Index cutoff_aux() const noexcept { return nb_; }
    Eigen::Index dim() const noexcept { return nt_ * nb_; }

    const SparseMatrix& a() const noexcept { return a_; }
    const SparseMatrix& b() const noexcept { return b_; }
    const SparseMatrix& x_a() const noexcept { return xa_; }
    const SparseMatrix& x_b() const noexcept { return xb_; }
    /// x_a x_b on the product space.
    const SparseMatrix& coupling() const noexcept { return coupling_; }
    /// Diagonal of omega (a†a + b†b).
    const RVector& free_energies() const noexcept { return free_; }
    const RVector& n_target() const noexcept { return n_a_; }
    const RVector& n_aux() const noexcept { return n_b_; }

    /// H(g) with g in units of omega.
    SparseMatrix hamiltonian(double g) const;

    /// Indices of each excitation-parity sector; H(g) never mixes them.
    const std::vector<Eigen::Index>& parity_sector(int parity) const { return parity == 0 ? even_ : odd_; }

private:
    friend FockSystem build_system(Eigen::Index, Eigen::Index);
    FockSystem() = default;

    Eigen::Index nt_ = 0;
    Eigen::Index nb_ = 0;
    SparseMatrix a_, b_, xa_, xb_, coupling_;
    RVector free_, n_a_, n_b_;
    std::vector<Eigen::Index> even_, odd_;
};

/// Throws DimensionError if either cutoff is below 2.
FockSystem build_system(Eigen::Index cutoff_target = 25, Eigen::Index cutoff_aux = 25);

enum class Space { target, auxiliary, product };

class DensityMatrix
{
public:
    DensityMatrix(CMatrix matrix, Space space);

    const CMatrix& matrix() const noexcept { return matrix_; }
    Space space() const noexcept { return space_; }
    Complex trace() const { return matrix_.trace(); }

    /// Throws PhysicalityError unless trace, hermiticity and positivity hold
    /// to the given tolerances.
    void validate(double trace_tol = 1e-10, double herm_tol = 1e-10, double eig_tol = 1e-8) const;

private:
    CMatrix matrix_;
    Space space_;
};

/// Target uniformly mixed over its 12 lowest Fock states, auxiliary in vacuum.
DensityMatrix mixed_12_initial(const FockSystem& system);

/// Product of truncated, renormalized thermal states.
DensityMatrix thermal_state(const FockSystem& system, double n_target, double n_aux);

/// Throws SpaceError unless `rho` lives on the product space.
DensityMatrix partial_trace_target(const FockSystem& system, const DensityMatrix& rho);

/// Tr(rho^2).
double purity(const DensityMatrix& rho);

/// Expectation of `op` (product space).
double expectation(const DensityMatrix& rho, const RVector& diagonal_op);

/// Second moments of (a, a†, b, b†) in `rho`, for comparison with the
/// covariance propagator.
CovarianceState moments(const FockSystem& system, const DensityMatrix& rho);

/// Closed-system evolution under a single-channel pulse. Each segment's
/// propagator comes from the eigendecomposition of the real-symmetric H
/// in each parity sector. Throws UnsupportedError for multi-channel pulses.
DensityMatrix evolve_closed(const FockSystem& system, const ControlPulse& pulse, const DensityMatrix& rho0);

/// Target purity after `pulse` for the mixed-12 input, computed by evolving
/// the twelve pure inputs |n>|0> through the eigendecomposition route.
double swap_purity(const FockSystem& system, const ControlPulse& pulse);

/// Pure-state propagation by a Chebyshev expansion of exp(-iHt) applied to
/// the twelve swap inputs; the optimizer's swap objective.
class SwapPropagator
{
public:
    explicit SwapPropagator(const FockSystem& system, int levels = 12);

    /// Target purity after a uniform single-channel pulse (pulse units).
    double purity(std::span<const double> g_values, double total_time) const;

    /// Final states, one column per input |n>|0>.
    CMatrix evolve(std::span<const double> g_values, double total_time) const;

private:
    const FockSystem* system_;
    int levels_;
};

/// exp(-i h t) v for real-symmetric sparse h, by Chebyshev expansion over
/// Gershgorin spectral bounds. Accurate to roughly machine precision.
CMatrix expmv_chebyshev(const SparseMatrix& h, double t, const CMatrix& v);

struct LindbladOptions
{
    /// Times (periods, relative to the pulse start) at which to record
    /// occupations. The end time is always recorded.
    std::vector<double> sample_times;
    double abs_tol = 1e-11;
    double rel_tol = 1e-11;
    /// Largest allowed population of either mode's top Fock level.
    double truncation_threshold = 1e-6;
};

struct LindbladResult
{
    DensityMatrix final_state;
    std::vector<TrajectoryPoint> trajectory;
};

/// Thermal-bath master equation
///   d rho/dt = -i[H(g(t)), rho] + gamma (n_T+1) D[a] + gamma n_T D[a†]
///              + kappa (n_aux+1) D[b] + kappa n_aux D[b†],
/// integrated by adaptive Dormand–Prince steps. Throws TruncationError when
/// a top-level population exceeds the threshold, DomainError when the
/// thermal occupations do not fit the cutoffs.
LindbladResult evolve_lindblad(const FockSystem& system, const ModelParams& params,
                               const ControlPulse& pulse, const DensityMatrix& rho0,
                               const LindbladOptions& options = {});

} // namespace cool
