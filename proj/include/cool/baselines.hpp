#pragma once

#include <cool/model.hpp>

#include <span>
#include <vector>

namespace cool {

/// Best constant-coupling steady state at one auxiliary damping rate.
/// g_opt is in units of omega.
struct SidebandPoint
{
    double kappa = 0.0;
    double g_opt = 0.0;
    double n_ss = 0.0;
};

/// Log-spaced coupling grid, units of omega.
struct CouplingGrid
{
    double g_min = 1e-4;
    double g_max = 1.0;
    int points = 200;
    /// Golden-section stopping width, relative to g.
    double rel_tol = 1e-3;
};

/// Steady-state <a†a> at constant g (units of omega), or +inf when the
/// drift is not Hurwitz.
double sideband_occupation(const ModelParams& params, double g);

/// Minimizes the steady-state <a†a> over constant g for the first
/// auxiliary of `params`. Throws NoSteadyStateError if no grid point is
/// stable.
SidebandPoint sideband_point(const ModelParams& params, const CouplingGrid& grid = {});

/// sideband_point() for each kappa, substituted into the first auxiliary.
/// Results follow the order of `kappas`.
std::vector<SidebandPoint> sideband_curve(const ModelParams& params, std::span<const double> kappas,
                                          const CouplingGrid& grid = {}, std::size_t jobs = 1);

/// <a†a> after constant coupling g (units of omega) held for one RWA swap
/// time π/(2g), starting from the thermal state.
double rwa_swap_cool(const ModelParams& params, double g);

} // namespace cool
