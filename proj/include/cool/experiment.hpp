#pragma once

#include <cool/baselines.hpp>
#include <cool/model.hpp>
#include <cool/optimizer.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cool {

using Json = nlohmann::json;

// Pulse schema: {"channels": [[{"duration": d, "g": g}, ...], ...], "total_time": t}
// with g in pulse units and durations in periods.
Json pulse_to_json(const ControlPulse& pulse);
ControlPulse pulse_from_json(const Json& j);

/// Overrides from the command line.
struct RunContext
{
    std::size_t jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    bool optimize = false;
};

struct Check
{
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Per-τ segment count: max(min_segments, ceil(segments_per_period * τ)).
struct Segmentation
{
    double segments_per_period = 5.0;
    std::size_t min_segments = 5;

    std::size_t count(double total_time) const;
};

/// Settings shared by the pulse-optimizing experiments.
struct SearchSettings
{
    std::vector<double> time_grid;
    Segmentation segments;
    std::size_t restarts = 0; // 0: default_restarts()
    std::uint64_t seed = 1;
    double g_max = 5.0;
};

struct SwapCase
{
    std::vector<double> values;
    double total_time = 1.0;
    double expected_purity = 0.0;
};

struct SwapConfig
{
    std::array<Eigen::Index, 2> cutoffs{25, 25};
    std::vector<SwapCase> cases;
    double tolerance = 2e-4;
    bool optimize = false;
    std::size_t n_segments = 5;
    double total_time = 1.0;
    std::size_t restarts = 50;
    std::uint64_t seed = 1;
    double g_max = 5.0;
    double target_purity = 0.9999;
    std::filesystem::path output_path = "out/swap";
};

struct Panel
{
    double gamma_n_thermal = 0.0;
    std::vector<double> time_grid;
};

struct Figure1Config
{
    double n_thermal = 100.0;
    double n_aux = 0.0;
    std::vector<Panel> panels;
    std::vector<double> kappa_grid;
    SearchSettings search;
    CouplingGrid g_grid;
    double dominance_slack = 1e-2;
    std::filesystem::path output_path = "out/figure1";
};

struct Figure2Config
{
    double gamma = 1e-6;
    double n_thermal = 100.0;
    double kappa = 1.35e-3;
    double n_aux = 0.0;
    std::size_t n_segments = 10;
    double total_time = 0.6;
    std::size_t restarts = 0;
    std::uint64_t seed = 1;
    double g_max = 5.0;
    int samples_per_period = 200;
    CouplingGrid g_grid;
    std::filesystem::path output_path = "out/figure2";
};

struct NauxConfig
{
    double gamma = 1e-6;
    double n_thermal = 100.0;
    std::vector<double> kappa_grid;
    std::vector<double> n_aux_values{0.0, 1e-4};
    SearchSettings search;
    std::filesystem::path output_path = "out/naux";
};

struct TwoAuxConfig
{
    double gamma = 1e-6;
    double n_thermal = 100.0;
    double n_aux = 0.0;
    std::vector<double> kappa_grid;
    SearchSettings search;
    std::filesystem::path output_path = "out/twoaux";
};

struct SidebandConfig
{
    double n_thermal = 100.0;
    double n_aux = 0.0;
    std::vector<double> gamma_n_thermal;
    std::vector<double> kappa_grid;
    CouplingGrid g_grid;
    std::filesystem::path output_path = "out/sideband";
};

// Strict parsing: unknown keys and ill-typed values throw ConfigError.
SwapConfig parse_swap(const Json& j);
Figure1Config parse_figure1(const Json& j);
Figure2Config parse_figure2(const Json& j);
NauxConfig parse_naux(const Json& j);
TwoAuxConfig parse_two_aux(const Json& j);
SidebandConfig parse_sideband(const Json& j);

// Effective configuration, defaults filled in; parse(to_json(c)) == c.
Json to_json(const SwapConfig& c);
Json to_json(const Figure1Config& c);
Json to_json(const Figure2Config& c);
Json to_json(const NauxConfig& c);
Json to_json(const TwoAuxConfig& c);
Json to_json(const SidebandConfig& c);

struct SwapOutcome
{
    std::vector<double> purities; // one per case
    std::optional<OptimizationResult> optimized;
    double optimized_purity = 0.0;
    double max_top_population = 0.0;
};

struct TimePoint
{
    double tau = 0.0;
    std::size_t n_segments = 0;
    double n_cool = 0.0;
    RVector g_values;
    std::size_t restarts_used = 0;
    std::size_t best_restart = 0;
    std::string error;
};

/// Best controlled result over the time grid at one (γ n_T, κ).
struct CoolingPoint
{
    double gamma_n_thermal = 0.0;
    double kappa = 0.0;
    SidebandPoint sideband;
    std::vector<TimePoint> times;
    std::size_t best = 0;
    std::string error;

    bool ok() const { return error.empty() && !times.empty() && times[best].error.empty(); }
    const TimePoint& best_time() const { return times.at(best); }
    double improvement() const { return sideband.n_ss / best_time().n_cool; }
};

struct PanelSummary
{
    double gamma_n_thermal = 0.0;
    double min_controlled = 0.0;
    double min_sideband = 0.0;
    double kappa_controlled = 0.0;
    double kappa_sideband = 0.0;
    /// min over κ of the sideband curve / min over κ of the controlled curve.
    double min_ratio = 0.0;
    /// Largest per-κ ratio n_sideband / n_controlled.
    double max_pointwise_ratio = 0.0;
    std::size_t dominance_failures = 0;
};

struct Figure1Outcome
{
    std::vector<CoolingPoint> points; // sorted by (γ n_T, κ)
    std::vector<PanelSummary> panels;
};

struct Figure2Outcome
{
    OptimizationResult result;
    SidebandPoint sideband;
    PulsePropagation trajectory;
};

struct NauxRow
{
    double kappa = 0.0;
    double n_aux = 0.0;
    TimePoint best;
    double shift = 0.0; // relative to the first n_aux value at this κ
    std::string error;
};

struct TwoAuxRow
{
    double kappa = 0.0;
    TimePoint single;
    double tau = 0.0;
    double n_two = 0.0;
    double n_two_zero_second = 0.0;
    RVector g_two;
    std::string error;

    double ratio() const { return n_two / single.n_cool; }
};

struct RunReport
{
    std::string experiment;
    std::vector<Check> checks;
    std::vector<std::filesystem::path> outputs;

    bool passed() const;
};

/// Each run function writes its artifacts and a manifest under the output
/// directory and returns the in-memory outcome.
RunReport run_swap(const SwapConfig& config, const RunContext& ctx, SwapOutcome* outcome = nullptr);
RunReport run_figure1(const Figure1Config& config, const RunContext& ctx, Figure1Outcome* outcome = nullptr);
RunReport run_figure2(const Figure2Config& config, const RunContext& ctx, Figure2Outcome* outcome = nullptr);
RunReport run_naux_study(const NauxConfig& config, const RunContext& ctx, std::vector<NauxRow>* rows = nullptr);
RunReport run_two_aux(const TwoAuxConfig& config, const RunContext& ctx, std::vector<TwoAuxRow>* rows = nullptr);
RunReport run_sideband(const SidebandConfig& config, const RunContext& ctx,
                       std::vector<std::vector<SidebandPoint>>* curves = nullptr);

/// Parses `config` for `experiment` (swap, figure1, figure2, naux, twoaux,
/// sideband) and runs it. A manifest file may stand in for the config.
RunReport run_experiment(const std::string& experiment, const Json& config, const RunContext& ctx);

/// Extra starting points for a given (τ, segment count).
using WarmStarts = std::function<std::vector<RVector>(double total_time, std::size_t n_segments)>;

/// Optimizes at each τ of the grid; failures are recorded per τ.
std::vector<TimePoint> search_times(const Objective& objective, const SearchSettings& settings,
                                    const WarmStarts& warm_starts = {});

/// Index of the lowest successful n_cool, or times.size() if none.
std::size_t best_time(const std::vector<TimePoint>& times);

/// Log-spaced grid: `points` values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t points);

std::string sha256_hex(const std::string& data);

} // namespace cool
