#pragma once

#include <cool/fock.hpp>
#include <cool/minimize.hpp>
#include <cool/model.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace cool {

enum class ObjectiveKind { swap_purity, final_occupation };

enum class GradientMethod {
    /// Exact adjoint sensitivities for final_occupation, finite differences for swap_purity.
    automatic,
    finite_difference,
    sensitivity,
};

/// A pulse-design problem over equal-duration segments. Parameter vectors
/// are channel-major: [channel 0 segments..., channel 1 segments...].
class Objective
{
public:
    /// Maximize the target purity after a swap of the mixed-12 input.
    static Objective swap(std::size_t n_segments, double total_time, Eigen::Index cutoff_target = 25,
                          Eigen::Index cutoff_aux = 25, double g_max = 5.0);

    /// Minimize <a†a> at total_time, starting from the thermal state.
    static Objective occupation(ModelParams params, std::size_t n_segments, double total_time,
                                double g_max = 5.0);

    ObjectiveKind kind() const noexcept { return kind_; }
    const ModelParams& params() const noexcept { return params_; }
    std::size_t n_segments() const noexcept { return n_segments_; }
    std::size_t channels() const noexcept { return params_.num_aux(); }
    std::size_t dimension() const noexcept { return n_segments_ * channels(); }
    double total_time() const noexcept { return total_time_; }
    double g_max() const noexcept { return g_max_; }
    const FockSystem* fock() const noexcept { return fock_.get(); }

    /// Same problem at a different total time or segmentation.
    Objective with_total_time(double total_time) const;
    Objective with_segments(std::size_t n_segments) const;

    ControlPulse to_pulse(const RVector& g_values) const;

private:
    Objective(ObjectiveKind kind, ModelParams params, std::size_t n_segments, double total_time, double g_max);

    ObjectiveKind kind_;
    ModelParams params_;
    std::size_t n_segments_;
    double total_time_;
    double g_max_;
    std::shared_ptr<const FockSystem> fock_;
    std::shared_ptr<const SwapPropagator> swap_;
};

/// -purity for swap objectives, final <a†a> for occupation objectives.
/// Throws DimensionError on a wrong-length vector and DomainError when a
/// value lies outside [-g_max, g_max].
double evaluate(const Objective& objective, const RVector& g_values);

/// Central differences with step max(1e-6 |g|, 1e-8), or exact
/// sensitivities (occupation objective only).
RVector gradient(const Objective& objective, const RVector& g_values,
                 GradientMethod method = GradientMethod::automatic);

struct OptimizeOptions
{
    std::size_t restarts = 0; // 0: 20 for <= 10 segments per channel, else 50
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    GradientMethod gradient = GradientMethod::automatic;
    MinimizerOptions minimizer{};
    /// Extra starting points (clipped to the bounds), run before the seeded
    /// ones and numbered first.
    std::vector<RVector> warm_starts;
    /// Skip the remaining restarts once some restart reaches this value.
    std::optional<double> stop_value;
};

struct RestartSummary
{
    std::size_t index = 0;
    double value = 0.0;
    int iterations = 0;
    std::string stop_reason;
};

struct OptimizationResult
{
    ControlPulse best_pulse;
    double best_value = 0.0;
    std::size_t best_restart = 0;
    std::size_t restarts_used = 0;
    std::vector<RestartSummary> restarts;
    double gradient_norm_final = 0.0;
    std::uint64_t seed = 0;
    double wall_time = 0.0;
    double total_time = 0.0;
};

/// Starting points of the seeded multi-start: first all 0.5, then uniform
/// in [-g_max, g_max].
std::vector<RVector> initial_points(const Objective& objective, std::size_t restarts, std::uint64_t seed);

/// Multi-start quasi-Newton optimization. Restarts run on `jobs` workers;
/// the result does not depend on scheduling (ties go to the lowest index).
/// Throws OptimizationError if no restart produced a finite value.
OptimizationResult optimize(const Objective& objective, const OptimizeOptions& options = {});

struct TimeSearch
{
    std::vector<OptimizationResult> results; // one per grid entry, grid order
    std::size_t best_index = 0;
    const OptimizationResult& best() const { return results.at(best_index); }
};

/// optimize() at each total time of `time_grid`.
TimeSearch optimize_over_time(const Objective& objective, std::span<const double> time_grid,
                              const OptimizeOptions& options = {});

std::size_t default_restarts(std::size_t n_segments);

} // namespace cool
