#pragma once

#include <cool/types.hpp>

#include <numbers>
#include <span>
#include <vector>

namespace cool {

/// Unit conventions.
///
/// The target frequency is the unit of rate (omega = 1), and damping rates
/// gamma and kappa are stored relative to it. Durations everywhere in the
/// public API are in target periods (2π of radian time). Coupling values
/// carried by a ControlPulse are quoted per period, i.e. in units of
/// omega/2π; build_drift() and the other matrix-level functions take the
/// coupling in units of omega. The auxiliary is frequency-converted onto
/// resonance with the target, so both modes oscillate at omega.
namespace units {
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double omega = 1.0;
/// Radian time in one target period.
inline constexpr double period = two_pi;
/// Pulse coupling -> coupling in units of omega.
inline constexpr double pulse_coupling_scale = 1.0 / two_pi;

constexpr double radians(double periods) noexcept { return periods * period; }
constexpr double pulse_to_omega(double g_pulse) noexcept { return g_pulse * pulse_coupling_scale; }
constexpr double omega_to_pulse(double g_omega) noexcept { return g_omega / pulse_coupling_scale; }
} // namespace units

struct Auxiliary
{
    double kappa = 0.0;
    double n_aux = 0.0;
};

/// Physical constants of the target and its one or two auxiliaries.
/// Instances are produced by make_params() and are read-only afterwards.
class ModelParams
{
public:
    double omega() const noexcept { return units::omega; }
    double gamma() const noexcept { return gamma_; }
    double n_thermal() const noexcept { return n_thermal_; }
    std::span<const Auxiliary> auxiliaries() const noexcept { return aux_; }
    const Auxiliary& auxiliary(std::size_t j) const { return aux_.at(j); }
    std::size_t num_aux() const noexcept { return aux_.size(); }
    /// Dimension of the moment vector (a, a†, b1, b1†[, b2, b2†]).
    Eigen::Index dim() const noexcept { return 2 * (1 + static_cast<Eigen::Index>(aux_.size())); }

private:
    friend ModelParams make_params(double, double, std::span<const Auxiliary>);
    ModelParams(double gamma, double n_thermal, std::vector<Auxiliary> aux)
        : gamma_(gamma), n_thermal_(n_thermal), aux_(std::move(aux)) {}

    double gamma_;
    double n_thermal_;
    std::vector<Auxiliary> aux_;
};

/// Validates and packs the model. Throws ValidationError naming the bad
/// field, or UnsupportedError unless there are one or two auxiliaries.
ModelParams make_params(double gamma, double n_thermal, std::span<const Auxiliary> aux);

inline ModelParams make_params(double gamma, double n_thermal, std::initializer_list<Auxiliary> aux)
{
    return make_params(gamma, n_thermal, std::span<const Auxiliary>(aux.begin(), aux.size()));
}

/// Copy of `params` with the listed auxiliaries replaced.
ModelParams with_auxiliaries(const ModelParams& params, std::span<const Auxiliary> aux);

struct Segment
{
    double g = 0.0;
    double duration = 0.0;
};

/// Piecewise-constant coupling, one segment list per auxiliary channel.
class ControlPulse
{
public:
    /// Throws ValidationError on empty channels, non-positive durations or
    /// mismatched total times.
    explicit ControlPulse(std::vector<std::vector<Segment>> channels);
    /// Keeps `total_time` as given once it matches the durations to 1e-12.
    ControlPulse(std::vector<std::vector<Segment>> channels, double total_time);

    /// Equal-duration segments. `values` is channels × segments.
    static ControlPulse uniform(const RMatrix& values, double total_time);
    static ControlPulse uniform(std::span<const double> values, double total_time);
    static ControlPulse constant(double g, double total_time, std::size_t channels = 1);

    std::size_t num_channels() const noexcept { return channels_.size(); }
    std::size_t num_segments(std::size_t channel = 0) const { return channels_.at(channel).size(); }
    std::span<const Segment> channel(std::size_t c) const { return channels_.at(c); }
    double total_time() const noexcept { return total_time_; }

    /// Value of channel `c` at time t (right-continuous; t == total_time
    /// returns the final segment).
    double value_at(std::size_t c, double t) const;

    /// True when every channel has the same equal-duration segmentation.
    bool is_uniform() const;

    /// channels × segments matrix of values. Requires is_uniform().
    RMatrix values() const;

    /// All channel values flattened channel-major, the optimizer's layout.
    RVector flat_values() const;

    /// Merged breakpoints of all channels; consecutive pairs delimit
    /// intervals on which every channel is constant.
    std::vector<double> breakpoints() const;

private:
    std::vector<std::vector<Segment>> channels_;
    double total_time_ = 0.0;
};

/// Refines a pulse to `n_segments` equal segments per channel. Throws
/// DomainError if that would coarsen any channel.
ControlPulse pulse_resample(const ControlPulse& pulse, std::size_t n_segments);

struct CoolingMetrics
{
    double n_cool = 0.0;
    double f_cool = 0.0;
    double gamma_eff = 0.0;
};

/// f_cool = n_T / n_cool and the implied extraction rate gamma * f_cool.
CoolingMetrics metrics_from_occupation(double n_cool, const ModelParams& params);

} // namespace cool
