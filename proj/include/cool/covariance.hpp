#pragma once

#include <cool/model.hpp>
#include <cool/types.hpp>

#include <span>
#include <vector>

namespace cool {

/// Ordered second moments C(i,j) = <x_i x_j> of x = (a, a†, b1, b1†[, b2, b2†]).
/// First moments vanish for every state this library produces, so these are
/// also the covariances.
class CovarianceState
{
public:
    CovarianceState(CMatrix matrix, double time);

    const CMatrix& matrix() const noexcept { return matrix_; }
    Complex operator()(Eigen::Index i, Eigen::Index j) const { return matrix_(i, j); }
    double time() const noexcept { return time_; }
    Eigen::Index dim() const noexcept { return matrix_.rows(); }
    std::size_t num_modes() const noexcept { return static_cast<std::size_t>(matrix_.rows() / 2); }

private:
    CMatrix matrix_;
    double time_;
};

/// Drift matrix of the moment equation for per-auxiliary couplings g (units of omega).
/// Throws DimensionError if g.size() != params.num_aux().
CMatrix build_drift(const ModelParams& params, std::span<const double> g);

/// Derivative of the drift matrix with respect to the coupling of auxiliary `channel`.
CMatrix drift_derivative(const ModelParams& params, std::size_t channel);

/// Thermal-bath diffusion matrix; independent of the couplings.
CMatrix build_diffusion(const ModelParams& params);

/// Product of thermal states at n_T (target) and n_aux (each auxiliary).
CovarianceState thermal_covariance(const ModelParams& params);

/// Affine one-step map C -> phi C phi^t + q of a constant-coefficient interval.
struct SegmentMap
{
    CMatrix phi;
    CMatrix q;

    CMatrix apply(const CMatrix& c) const { return phi * c * phi.transpose() + q; }
};

/// Exact solution of dC/dt = A C + C A^t + G over `dt` periods, obtained
/// from one block exponential exp([[-A, G], [0, A^t]] t).
SegmentMap segment_map(const CMatrix& drift, const CMatrix& diffusion, double dt);

/// Moments beyond this magnitude abort propagation.
inline constexpr double divergence_limit = 1e12;

/// Advances `state` by `dt` periods. Throws DivergenceError (reporting
/// `segment_index`) if the result is non-finite or exceeds divergence_limit.
CovarianceState propagate_segment(const CovarianceState& state, const CMatrix& drift,
                                  const CMatrix& diffusion, double dt,
                                  std::size_t segment_index = 0);

struct TrajectoryPoint
{
    double time = 0.0;
    double n_target = 0.0;
    std::vector<double> n_aux;
};

struct PulsePropagation
{
    CovarianceState final_state;
    std::vector<TrajectoryPoint> trajectory;
};

/// Chains propagate_segment over the pulse and samples the occupations on
/// a uniform grid of at least `samples_per_period` points per period.
PulsePropagation propagate_pulse(const ModelParams& params, const ControlPulse& pulse,
                                 const CovarianceState& initial, int samples_per_period = 50);

/// Propagation without sampling; same result as propagate_pulse().final_state.
CovarianceState propagate_final(const ModelParams& params, const ControlPulse& pulse,
                                const CovarianceState& initial);

/// <m† m> for mode 0 (target) or 1.. (auxiliaries). Throws PhysicalityError
/// if the imaginary part exceeds 1e-8.
double mean_occupation(const CovarianceState& state, std::size_t mode = 0);

/// Stationary moments for constant couplings g (units of omega), from the vectorized Lyapunov
/// equation. Throws NoSteadyStateError if the drift is not Hurwitz.
CovarianceState steady_state(const ModelParams& params, std::span<const double> g);

/// Target occupation after a uniform pulse starting from the thermal state.
/// `values` is channels × segments in pulse units. When `gradient` is non-null it receives
/// d/d(values) in channel-major layout, computed exactly by an adjoint sweep
/// over the segment maps.
double final_occupation(const ModelParams& params, const RMatrix& values, double total_time,
                        RVector* gradient = nullptr);

/// exp(x) together with its Fréchet derivative in direction `e`.
struct ExpFrechet
{
    CMatrix exp;
    CMatrix derivative;
};
ExpFrechet expm_frechet(const CMatrix& x, const CMatrix& e);

} // namespace cool
