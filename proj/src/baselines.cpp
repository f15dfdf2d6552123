#include <cool/baselines.hpp>
#include <cool/covariance.hpp>
#include <cool/errors.hpp>

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace cool {

double sideband_occupation(const ModelParams& params, double g)
{
    std::vector<double> couplings(params.num_aux(), 0.0);
    couplings[0] = g;
    try {
        return mean_occupation(steady_state(params, couplings));
    } catch (const NoSteadyStateError&) {
        return std::numeric_limits<double>::infinity();
    }
}

SidebandPoint sideband_point(const ModelParams& params, const CouplingGrid& grid)
{
    if (!(grid.g_min > 0.0) || !(grid.g_max > grid.g_min) || grid.points < 2) {
        throw ValidationError("g_grid", "need 0 < g_min < g_max and at least two points");
    }
    const double lo = std::log(grid.g_min);
    const double step = (std::log(grid.g_max) - lo) / (grid.points - 1);
    std::vector<double> n(static_cast<std::size_t>(grid.points));
    int best = -1;
    for (int i = 0; i < grid.points; ++i) {
        n[i] = sideband_occupation(params, std::exp(lo + i * step));
        if (std::isfinite(n[i]) && (best < 0 || n[i] < n[best])) best = i;
    }
    const double kappa = params.auxiliary(0).kappa;
    if (best < 0) {
        throw NoSteadyStateError("no stable coupling in [" + std::to_string(grid.g_min) + ", " +
                                 std::to_string(grid.g_max) + "] at kappa " + std::to_string(kappa));
    }

    // Golden section in log g between the stable neighbours.
    double a = lo + (best > 0 && std::isfinite(n[best - 1]) ? best - 1 : best) * step;
    double b = lo + (best + 1 < grid.points && std::isfinite(n[best + 1]) ? best + 1 : best) * step;
    SidebandPoint point{kappa, std::exp(lo + best * step), n[best]};
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = sideband_occupation(params, std::exp(x1));
    double f2 = sideband_occupation(params, std::exp(x2));
    while (b - a > std::log1p(grid.rel_tol)) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - r * (b - a);
            f1 = sideband_occupation(params, std::exp(x1));
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + r * (b - a);
            f2 = sideband_occupation(params, std::exp(x2));
        }
    }
    for (auto [x, f] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
        if (f < point.n_ss) point = {kappa, std::exp(x), f};
    }
    return point;
}

std::vector<SidebandPoint> sideband_curve(const ModelParams& params, std::span<const double> kappas,
                                          const CouplingGrid& grid, std::size_t jobs)
{
    if (kappas.empty()) throw ValidationError("kappa_grid", "must not be empty");
    std::vector<SidebandPoint> out(kappas.size());
    std::vector<std::exception_ptr> errors(kappas.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < kappas.size();) {
            try {
                std::vector<Auxiliary> aux(params.auxiliaries().begin(), params.auxiliaries().end());
                aux[0].kappa = kappas[i];
                out[i] = sideband_point(with_auxiliaries(params, aux), grid);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, kappas.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

double rwa_swap_cool(const ModelParams& params, double g)
{
    if (!(g > 0.0) || !std::isfinite(g)) throw ValidationError("g", "must be positive");
    // π/(2g) radians.
    const double duration = 1.0 / (4.0 * g);
    RMatrix values = RMatrix::Zero(static_cast<Eigen::Index>(params.num_aux()), 1);
    values(0, 0) = units::omega_to_pulse(g);
    const ControlPulse pulse = ControlPulse::uniform(values, duration);
    return mean_occupation(propagate_final(params, pulse, thermal_covariance(params)));
}

} // namespace cool
