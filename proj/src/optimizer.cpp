#include <cool/optimizer.hpp>
#include <cool/covariance.hpp>
#include <cool/errors.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

namespace cool {
namespace {

ModelParams closed_params()
{
    return make_params(0.0, 0.0, {Auxiliary{0.0, 0.0}});
}

void check_dimension(const Objective& objective, const RVector& g)
{
    if (static_cast<std::size_t>(g.size()) != objective.dimension()) {
        throw DimensionError("expected " + std::to_string(objective.dimension()) + " pulse values, got " +
                             std::to_string(g.size()));
    }
}

RMatrix as_channels(const Objective& objective, const RVector& g)
{
    // Channel-major flat vector -> channels × segments.
    RMatrix m(static_cast<Eigen::Index>(objective.channels()), static_cast<Eigen::Index>(objective.n_segments()));
    for (Eigen::Index c = 0; c < m.rows(); ++c) m.row(c) = g.segment(c * m.cols(), m.cols()).transpose();
    return m;
}

// Objective value without the bound check; finite-difference stencils may
// step just outside the box.
double raw_value(const Objective& objective, const RVector& g, const SwapPropagator* swap)
{
    if (objective.kind() == ObjectiveKind::swap_purity) {
        if (swap == nullptr) throw UnsupportedError("swap objective without a propagator");
        return -swap->purity(std::span<const double>(g.data(), static_cast<std::size_t>(g.size())),
                             objective.total_time());
    }
    return final_occupation(objective.params(), as_channels(objective, g), objective.total_time());
}

RVector finite_difference(const Objective& objective, const RVector& g, const SwapPropagator* swap)
{
    RVector grad(g.size());
    RVector x = g;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double h = std::max(1e-6 * std::abs(g(i)), 1e-8);
        x(i) = g(i) + h;
        const double up = raw_value(objective, x, swap);
        x(i) = g(i) - h;
        const double down = raw_value(objective, x, swap);
        x(i) = g(i);
        grad(i) = (up - down) / (2.0 * h);
    }
    return grad;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

Objective::Objective(ObjectiveKind kind, ModelParams params, std::size_t n_segments, double total_time, double g_max)
    : kind_(kind), params_(std::move(params)), n_segments_(n_segments), total_time_(total_time), g_max_(g_max)
{
    if (n_segments_ < 1) throw ValidationError("n_segments", "must be at least 1");
    if (!(total_time_ > 0.0) || !std::isfinite(total_time_)) throw ValidationError("total_time", "must be positive");
    if (!(g_max_ > 0.0) || !std::isfinite(g_max_)) throw ValidationError("g_max", "must be positive");
}

Objective Objective::swap(std::size_t n_segments, double total_time, Eigen::Index cutoff_target,
                          Eigen::Index cutoff_aux, double g_max)
{
    Objective o(ObjectiveKind::swap_purity, closed_params(), n_segments, total_time, g_max);
    auto fock = std::make_shared<const FockSystem>(build_system(cutoff_target, cutoff_aux));
    o.swap_ = std::make_shared<const SwapPropagator>(*fock);
    o.fock_ = std::move(fock);
    return o;
}

Objective Objective::occupation(ModelParams params, std::size_t n_segments, double total_time, double g_max)
{
    return Objective(ObjectiveKind::final_occupation, std::move(params), n_segments, total_time, g_max);
}

Objective Objective::with_total_time(double total_time) const
{
    Objective o = *this;
    if (!(total_time > 0.0) || !std::isfinite(total_time)) throw ValidationError("total_time", "must be positive");
    o.total_time_ = total_time;
    return o;
}

Objective Objective::with_segments(std::size_t n_segments) const
{
    Objective o = *this;
    if (n_segments < 1) throw ValidationError("n_segments", "must be at least 1");
    o.n_segments_ = n_segments;
    return o;
}

ControlPulse Objective::to_pulse(const RVector& g_values) const
{
    check_dimension(*this, g_values);
    return ControlPulse::uniform(as_channels(*this, g_values), total_time_);
}

double evaluate(const Objective& objective, const RVector& g_values)
{
    check_dimension(objective, g_values);
    for (Eigen::Index i = 0; i < g_values.size(); ++i) {
        if (!(std::abs(g_values(i)) <= objective.g_max() * (1.0 + 1e-12))) {
            throw DomainError("pulse value " + std::to_string(g_values(i)) + " outside [-g_max, g_max]");
        }
    }
    if (objective.kind() == ObjectiveKind::swap_purity) {
        const SwapPropagator swap(*objective.fock());
        return raw_value(objective, g_values, &swap);
    }
    return raw_value(objective, g_values, nullptr);
}

RVector gradient(const Objective& objective, const RVector& g_values, GradientMethod method)
{
    check_dimension(objective, g_values);
    if (method == GradientMethod::automatic) {
        method = objective.kind() == ObjectiveKind::final_occupation ? GradientMethod::sensitivity
                                                                     : GradientMethod::finite_difference;
    }
    if (method == GradientMethod::sensitivity) {
        if (objective.kind() != ObjectiveKind::final_occupation) {
            throw UnsupportedError("sensitivity gradients exist for the occupation objective only");
        }
        RVector grad;
        final_occupation(objective.params(), as_channels(objective, g_values), objective.total_time(), &grad);
        return grad;
    }
    if (objective.kind() == ObjectiveKind::swap_purity) {
        const SwapPropagator swap(*objective.fock());
        return finite_difference(objective, g_values, &swap);
    }
    return finite_difference(objective, g_values, nullptr);
}

std::size_t default_restarts(std::size_t n_segments)
{
    return n_segments <= 10 ? 20 : 50;
}

std::vector<RVector> initial_points(const Objective& objective, std::size_t restarts, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-objective.g_max(), objective.g_max());
    const auto n = static_cast<Eigen::Index>(objective.dimension());
    std::vector<RVector> points;
    for (std::size_t r = 0; r < restarts; ++r) {
        if (r == 0) {
            points.push_back(RVector::Constant(n, std::min(0.5, objective.g_max())));
            continue;
        }
        RVector x(n);
        for (Eigen::Index i = 0; i < n; ++i) x(i) = dist(rng);
        points.push_back(std::move(x));
    }
    return points;
}

OptimizationResult optimize(const Objective& objective, const OptimizeOptions& options)
{
    const auto start = std::chrono::steady_clock::now();
    // Warm starts run first; the seeded points follow unchanged.
    std::vector<RVector> starts;
    for (const RVector& w : options.warm_starts) {
        if (static_cast<std::size_t>(w.size()) != objective.dimension()) {
            throw DimensionError("warm start has the wrong length");
        }
        starts.push_back(w.cwiseMax(-objective.g_max()).cwiseMin(objective.g_max()));
    }
    const std::size_t seeded =
        options.restarts > 0 ? options.restarts : default_restarts(objective.n_segments());
    for (RVector& x : initial_points(objective, seeded, options.seed)) starts.push_back(std::move(x));
    const std::size_t restarts = starts.size();

    MinimizerOptions mopt = options.minimizer;
    mopt.lower = -objective.g_max();
    mopt.upper = objective.g_max();

    GradientMethod method = options.gradient;
    if (method == GradientMethod::automatic) {
        method = objective.kind() == ObjectiveKind::final_occupation ? GradientMethod::sensitivity
                                                                     : GradientMethod::finite_difference;
    }

    std::vector<std::optional<MinimizerReport>> reports(restarts);
    std::atomic<std::size_t> next{0};
    // Lowest restart index that reached stop_value; later indices are skipped.
    std::atomic<std::size_t> stop_index{std::numeric_limits<std::size_t>::max()};

    auto worker = [&] {
        std::unique_ptr<SwapPropagator> swap;
        if (objective.kind() == ObjectiveKind::swap_purity) swap = std::make_unique<SwapPropagator>(*objective.fock());
        const ValueGradient f = [&](const RVector& x, RVector* grad) {
            if (grad == nullptr) return raw_value(objective, x, swap.get());
            if (method == GradientMethod::sensitivity) {
                if (objective.kind() != ObjectiveKind::final_occupation) {
                    throw UnsupportedError("sensitivity gradients exist for the occupation objective only");
                }
                return final_occupation(objective.params(), as_channels(objective, x), objective.total_time(), grad);
            }
            *grad = finite_difference(objective, x, swap.get());
            return raw_value(objective, x, swap.get());
        };
        for (;;) {
            const std::size_t r = next.fetch_add(1);
            if (r >= restarts || r > stop_index.load()) return;
            MinimizerReport rep = minimize_bfgs(f, starts[r], mopt);
            if (options.stop_value && std::isfinite(rep.value) && rep.value <= *options.stop_value) {
                std::size_t cur = stop_index.load();
                while (r < cur && !stop_index.compare_exchange_weak(cur, r)) {}
            }
            reports[r] = std::move(rep);
        }
    };

    const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, restarts));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    const std::size_t used = std::min(restarts, stop_index.load() == std::numeric_limits<std::size_t>::max()
                                                    ? restarts
                                                    : stop_index.load() + 1);
    OptimizationResult result{objective.to_pulse(starts[0]), std::numeric_limits<double>::infinity(), 0, 0, {}};
    bool found = false;
    for (std::size_t r = 0; r < used; ++r) {
        const auto& rep = reports[r];
        if (!rep) continue;
        result.restarts.push_back({r, rep->value, rep->iterations, rep->stop_reason});
        if (std::isfinite(rep->value) && (!found || rep->value < result.best_value)) {
            found = true;
            result.best_value = rep->value;
            result.best_restart = r;
            result.gradient_norm_final = rep->gradient_norm;
            result.best_pulse = objective.to_pulse(rep->x);
        }
    }
    if (!found) throw OptimizationError("every restart diverged or produced a non-finite objective");
    result.best_value = evaluate(objective, result.best_pulse.flat_values());
    result.restarts_used = used;
    result.seed = options.seed;
    result.total_time = objective.total_time();
    result.wall_time = elapsed_seconds(start);
    return result;
}

TimeSearch optimize_over_time(const Objective& objective, std::span<const double> time_grid,
                              const OptimizeOptions& options)
{
    if (time_grid.empty()) throw ValidationError("time_grid", "must not be empty");
    TimeSearch search;
    for (double tau : time_grid) {
        search.results.push_back(optimize(objective.with_total_time(tau), options));
        if (search.results.back().best_value < search.results[search.best_index].best_value) {
            search.best_index = search.results.size() - 1;
        }
    }
    return search;
}

} // namespace cool
