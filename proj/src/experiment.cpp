#include <cool/covariance.hpp>
#include <cool/errors.hpp>
#include <cool/experiment.hpp>
#include <cool/fock.hpp>
#include <cool/log.hpp>

#include <Eigen/Core>
#include <openssl/evp.h>
#include <spdlog/fmt/fmt.h>
#include <sys/utsname.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#ifndef COOL_VERSION
#define COOL_VERSION "0.0.0"
#endif

namespace cool {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

std::string num(double x)
{
    return fmt::format("{:.12e}", x);
}

std::string num_list(const RVector& v)
{
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ';';
        out += num(v(i));
    }
    return out;
}

// Quote only when a field would break the row.
std::string field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

class CsvWriter
{
public:
    CsvWriter(const fs::path& path, std::vector<std::string> header) : out_(path), columns_(header.size())
    {
        if (!out_) throw ConfigError("cannot write " + path.string());
        row(header);
    }

    void row(const std::vector<std::string>& cells)
    {
        if (cells.size() != columns_) throw DimensionError("CSV row has the wrong number of cells");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << field(cells[i]);
        out_ << '\n';
    }

private:
    std::ofstream out_;
    std::size_t columns_;
};

void write_json(const fs::path& path, const Json& j)
{
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::string utc_timestamp()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

fs::path prepare_dir(const fs::path& configured, const RunContext& ctx)
{
    fs::path dir = ctx.out ? *ctx.out : configured;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& f)
{
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) f(i);
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        worker();
        return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
}

Json checks_json(const std::vector<Check>& checks)
{
    Json out = Json::array();
    for (const Check& c : checks) out.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return out;
}

std::string platform()
{
    utsname u{};
    if (uname(&u) != 0) return "unknown";
    return std::string(u.sysname) + " " + u.release + " " + u.machine;
}

// Config plus everything needed to tell two runs apart.
void write_manifest(RunReport& report, const fs::path& dir, const Json& config, std::uint64_t seed,
                    const RunContext& ctx, const std::string& started, Clock::time_point t0)
{
    const std::string canonical = config.dump();
    Json outputs = Json::array();
    for (const fs::path& p : report.outputs) outputs.push_back(p.filename().string());
    const Json manifest = {
        {"manifest", 1},
        {"experiment", report.experiment},
        {"config", config},
        {"config_sha256", sha256_hex(canonical)},
        {"seed", seed},
        {"jobs", ctx.jobs},
        {"versions",
         {{"cool", COOL_VERSION},
          {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
          {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                        NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}}},
        {"platform", platform()},
        {"started", started},
        {"wall_time", std::chrono::duration<double>(Clock::now() - t0).count()},
        {"outputs", outputs},
        {"checks", checks_json(report.checks)},
    };
    const fs::path path = dir / "manifest.json";
    write_json(path, manifest);
    report.outputs.push_back(path);
}

double top_population(const FockSystem& system, const CMatrix& states)
{
    double worst = 0.0;
    for (Eigen::Index col = 0; col < states.cols(); ++col) {
        double top = 0.0;
        for (Eigen::Index i = 0; i < system.dim(); ++i) {
            const bool edge = i / system.cutoff_aux() == system.cutoff_target() - 1 ||
                              i % system.cutoff_aux() == system.cutoff_aux() - 1;
            if (edge) top += std::norm(states(i, col));
        }
        worst = std::max(worst, top);
    }
    return worst;
}

std::vector<double> sorted(std::vector<double> xs)
{
    std::sort(xs.begin(), xs.end());
    return xs;
}

} // namespace

bool RunReport::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string sha256_hex(const std::string& data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

std::size_t best_time(const std::vector<TimePoint>& times)
{
    std::size_t best = times.size();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!times[i].error.empty()) continue;
        if (best == times.size() || times[i].n_cool < times[best].n_cool) best = i;
    }
    return best;
}

std::vector<TimePoint> search_times(const Objective& objective, const SearchSettings& settings,
                                    const WarmStarts& warm_starts)
{
    if (settings.time_grid.empty()) throw ValidationError("time_grid", "must not be empty");
    std::vector<TimePoint> out;
    for (double tau : sorted(settings.time_grid)) {
        TimePoint tp;
        tp.tau = tau;
        tp.n_segments = settings.segments.count(tau);
        try {
            const Objective obj = objective.with_total_time(tau).with_segments(tp.n_segments);
            OptimizeOptions opt;
            opt.restarts = settings.restarts;
            opt.seed = settings.seed;
            if (warm_starts) opt.warm_starts = warm_starts(tau, tp.n_segments);
            const OptimizationResult r = optimize(obj, opt);
            tp.n_cool = r.best_value;
            tp.g_values = r.best_pulse.flat_values();
            tp.restarts_used = r.restarts_used;
            tp.best_restart = r.best_restart;
            logger()->debug("tau {} with {} segments: {:.6e} ({:.1f} s)", tau, tp.n_segments, tp.n_cool, r.wall_time);
        } catch (const std::exception& e) {
            tp.n_cool = nan_value;
            tp.error = e.what();
            logger()->warn("tau {}: {}", tau, e.what());
        }
        out.push_back(std::move(tp));
    }
    return out;
}

RunReport run_swap(const SwapConfig& config_in, const RunContext& ctx, SwapOutcome* outcome)
{
    const auto t0 = Clock::now();
    const std::string started = utc_timestamp();
    SwapConfig config = config_in;
    if (ctx.seed) config.seed = *ctx.seed;
    if (ctx.optimize) config.optimize = true;
    const fs::path dir = prepare_dir(config.output_path, ctx);
    config.output_path = dir;
    RunReport report{"swap", {}, {}};
    SwapOutcome result;

    const FockSystem system = build_system(config.cutoffs[0], config.cutoffs[1]);
    const SwapPropagator propagator(system);
    Json cases = Json::array();
    for (std::size_t i = 0; i < config.cases.size(); ++i) {
        const SwapCase& c = config.cases[i];
        const ControlPulse pulse = ControlPulse::uniform(std::span<const double>(c.values), c.total_time);
        const double p = swap_purity(system, pulse);
        result.purities.push_back(p);
        result.max_top_population = std::max(
            result.max_top_population, top_population(system, propagator.evolve(c.values, c.total_time)));
        const bool ok = std::abs(p - c.expected_purity) <= config.tolerance;
        report.checks.push_back({fmt::format("swap purity, case {}", i), ok,
                                 fmt::format("purity {:.7f}, expected {:.7f} +- {:.1e}", p, c.expected_purity,
                                             config.tolerance)});
        logger()->info("case {}: purity {:.7f} (expected {:.7f})", i, p, c.expected_purity);
        cases.push_back({{"pulse", pulse_to_json(pulse)}, {"purity", p}, {"expected_purity", c.expected_purity},
                         {"passed", ok}});
    }
    if (result.max_top_population > 1e-6) {
        logger()->warn("top Fock level holds population {:.3e}; cutoffs ({}, {}) may truncate the dynamics",
                       result.max_top_population, config.cutoffs[0], config.cutoffs[1]);
    }

    Json report_json = {{"experiment", "swap"},
                        {"cutoffs", config.cutoffs},
                        {"cases", cases},
                        {"max_top_population", result.max_top_population}};
    if (config.optimize) {
        const Objective objective = Objective::swap(config.n_segments, config.total_time, config.cutoffs[0],
                                                    config.cutoffs[1], config.g_max);
        OptimizeOptions opt;
        opt.restarts = config.restarts;
        opt.seed = config.seed;
        opt.jobs = ctx.jobs;
        opt.stop_value = -config.target_purity;
        OptimizationResult r = optimize(objective, opt);
        // Confirm through the eigendecomposition route.
        result.optimized_purity = swap_purity(system, r.best_pulse);
        const bool ok = result.optimized_purity >= config.target_purity;
        report.checks.push_back({"optimized swap purity", ok,
                                 fmt::format("purity {:.7f} after {} restarts, target {}", result.optimized_purity,
                                             r.restarts_used, config.target_purity)});
        logger()->info("optimized purity {:.7f} from restart {} of {} ({:.1f} s)", result.optimized_purity,
                       r.best_restart, r.restarts_used, r.wall_time);
        report_json["optimized"] = {{"pulse", pulse_to_json(r.best_pulse)},
                                    {"purity", result.optimized_purity},
                                    {"restarts_used", r.restarts_used},
                                    {"best_restart", r.best_restart},
                                    {"seed", r.seed},
                                    {"wall_time", r.wall_time}};
        result.optimized = std::move(r);
    }
    report_json["wall_time"] = std::chrono::duration<double>(Clock::now() - t0).count();
    const fs::path path = dir / "swap_report.json";
    write_json(path, report_json);
    report.outputs.push_back(path);
    write_manifest(report, dir, to_json(config), config.seed, ctx, started, t0);
    if (outcome) *outcome = std::move(result);
    return report;
}

RunReport run_figure1(const Figure1Config& config_in, const RunContext& ctx, Figure1Outcome* outcome)
{
    const auto t0 = Clock::now();
    const std::string started = utc_timestamp();
    Figure1Config config = config_in;
    if (ctx.seed) config.search.seed = *ctx.seed;
    const fs::path dir = prepare_dir(config.output_path, ctx);
    config.output_path = dir;
    RunReport report{"figure1", {}, {}};

    std::vector<Panel> panels = config.panels;
    std::sort(panels.begin(), panels.end(),
              [](const Panel& a, const Panel& b) { return a.gamma_n_thermal < b.gamma_n_thermal; });
    const std::vector<double> kappas = sorted(config.kappa_grid);

    Figure1Outcome result;
    std::vector<std::size_t> panel_of;
    for (std::size_t p = 0; p < panels.size(); ++p) {
        for (double kappa : kappas) {
            CoolingPoint pt;
            pt.gamma_n_thermal = panels[p].gamma_n_thermal;
            pt.kappa = kappa;
            result.points.push_back(std::move(pt));
            panel_of.push_back(p);
        }
    }

    std::atomic<std::size_t> done{0};
    parallel_for(result.points.size(), ctx.jobs, [&](std::size_t i) {
        CoolingPoint& pt = result.points[i];
        try {
            const ModelParams params = make_params(pt.gamma_n_thermal / config.n_thermal, config.n_thermal,
                                                   {{pt.kappa, config.n_aux}});
            WarmStarts warm;
            try {
                pt.sideband = sideband_point(params, config.g_grid);
                const double g = units::omega_to_pulse(pt.sideband.g_opt);
                warm = [g](double, std::size_t n) { return std::vector<RVector>{RVector::Constant(n, g)}; };
            } catch (const Error& e) {
                pt.sideband = {pt.kappa, nan_value, nan_value};
                pt.error = std::string("sideband: ") + e.what();
            }
            SearchSettings search = config.search;
            search.time_grid = panels[panel_of[i]].time_grid;
            const Objective objective = Objective::occupation(params, 1, search.time_grid.front(), search.g_max);
            pt.times = search_times(objective, search, warm);
            pt.best = best_time(pt.times);
            if (pt.best == pt.times.size()) {
                pt.best = 0;
                if (pt.error.empty()) pt.error = "every total time failed";
            }
        } catch (const std::exception& e) {
            pt.error = e.what();
        }
        const std::size_t k = ++done;
        if (pt.ok()) {
            logger()->info("[{}/{}] gamma*n_T {:.1e} kappa {:.3e}: controlled {:.4e} (tau {}), sideband {:.4e}", k,
                           result.points.size(), pt.gamma_n_thermal, pt.kappa, pt.best_time().n_cool,
                           pt.best_time().tau, pt.sideband.n_ss);
        } else {
            logger()->warn("[{}/{}] gamma*n_T {:.1e} kappa {:.3e}: {}", k, result.points.size(), pt.gamma_n_thermal,
                           pt.kappa, pt.error);
        }
    });

    std::size_t failures = 0, errors = 0;
    for (const Panel& panel : panels) {
        PanelSummary s;
        s.gamma_n_thermal = panel.gamma_n_thermal;
        s.min_controlled = s.min_sideband = std::numeric_limits<double>::infinity();
        for (const CoolingPoint& pt : result.points) {
            if (pt.gamma_n_thermal != panel.gamma_n_thermal) continue;
            if (std::isfinite(pt.sideband.n_ss) && pt.sideband.n_ss < s.min_sideband) {
                s.min_sideband = pt.sideband.n_ss;
                s.kappa_sideband = pt.kappa;
            }
            if (!pt.ok()) {
                ++errors;
                continue;
            }
            const double n = pt.best_time().n_cool;
            if (n < s.min_controlled) {
                s.min_controlled = n;
                s.kappa_controlled = pt.kappa;
            }
            s.max_pointwise_ratio = std::max(s.max_pointwise_ratio, pt.improvement());
            if (n > (1.0 + config.dominance_slack) * pt.sideband.n_ss) ++s.dominance_failures;
        }
        s.min_ratio = s.min_sideband / s.min_controlled;
        failures += s.dominance_failures;
        result.panels.push_back(s);
    }
    report.checks.push_back({"controlled cooling dominates sideband cooling", failures == 0,
                             fmt::format("{} grid points above {} x sideband", failures, 1.0 + config.dominance_slack)});
    report.checks.push_back({"every grid point computed", errors == 0, fmt::format("{} failed points", errors)});

    const std::string stamp = utc_timestamp();
    {
        const fs::path path = dir / "figure1.csv";
        CsvWriter csv(path, {"experiment", "gamma_n_thermal", "kappa", "tau", "n_segments", "n_cool_controlled",
                             "n_cool_sideband", "improvement_factor", "g_sideband", "g_values", "seed", "timestamp",
                             "error"});
        for (const CoolingPoint& pt : result.points) {
            const bool ok = pt.ok();
            const TimePoint* best = ok ? &pt.best_time() : nullptr;
            csv.row({"figure1", num(pt.gamma_n_thermal), num(pt.kappa), best ? num(best->tau) : num(nan_value),
                     best ? std::to_string(best->n_segments) : "0", best ? num(best->n_cool) : num(nan_value),
                     num(pt.sideband.n_ss), ok ? num(pt.improvement()) : num(nan_value), num(pt.sideband.g_opt),
                     best ? num_list(best->g_values) : "", std::to_string(config.search.seed), stamp, pt.error});
        }
        report.outputs.push_back(path);
    }
    {
        const fs::path path = dir / "figure1_times.csv";
        CsvWriter csv(path, {"gamma_n_thermal", "kappa", "tau", "n_segments", "n_cool_controlled", "restarts_used",
                             "best_restart", "g_values", "error"});
        for (const CoolingPoint& pt : result.points) {
            for (const TimePoint& tp : pt.times) {
                csv.row({num(pt.gamma_n_thermal), num(pt.kappa), num(tp.tau), std::to_string(tp.n_segments),
                         num(tp.n_cool), std::to_string(tp.restarts_used), std::to_string(tp.best_restart),
                         num_list(tp.g_values), tp.error});
            }
        }
        report.outputs.push_back(path);
    }
    {
        Json summary = Json::array();
        for (const PanelSummary& s : result.panels) {
            summary.push_back({{"gamma_n_thermal", s.gamma_n_thermal},
                               {"min_controlled", s.min_controlled},
                               {"kappa_at_min_controlled", s.kappa_controlled},
                               {"min_sideband", s.min_sideband},
                               {"kappa_at_min_sideband", s.kappa_sideband},
                               {"min_ratio", s.min_ratio},
                               {"max_pointwise_ratio", s.max_pointwise_ratio},
                               {"dominance_failures", s.dominance_failures}});
        }
        const fs::path path = dir / "figure1_summary.json";
        write_json(path, {{"panels", summary},
                          {"sideband_g_range", {config.g_grid.g_min, config.g_grid.g_max}},
                          {"sideband_definition", "steady state at the best constant coupling"},
                          {"checks", checks_json(report.checks)}});
        report.outputs.push_back(path);
    }
    write_manifest(report, dir, to_json(config), config.search.seed, ctx, started, t0);
    if (outcome) *outcome = std::move(result);
    return report;
}

RunReport run_figure2(const Figure2Config& config_in, const RunContext& ctx, Figure2Outcome* outcome)
{
    const auto t0 = Clock::now();
    const std::string started = utc_timestamp();
    Figure2Config config = config_in;
    if (ctx.seed) config.seed = *ctx.seed;
    const fs::path dir = prepare_dir(config.output_path, ctx);
    config.output_path = dir;
    RunReport report{"figure2", {}, {}};

    const ModelParams params = make_params(config.gamma, config.n_thermal, {{config.kappa, config.n_aux}});
    const SidebandPoint sideband = sideband_point(params, config.g_grid);
    const Objective objective = Objective::occupation(params, config.n_segments, config.total_time, config.g_max);
    OptimizeOptions opt;
    opt.restarts = config.restarts;
    opt.seed = config.seed;
    opt.jobs = ctx.jobs;
    OptimizationResult r = optimize(objective, opt);
    PulsePropagation traj =
        propagate_pulse(params, r.best_pulse, thermal_covariance(params), config.samples_per_period);
    logger()->info("final <a+a> {:.6e}, sideband {:.6e} at g = {:.4e}", r.best_value, sideband.n_ss, sideband.g_opt);

    report.checks.push_back({"below the sideband steady state", r.best_value < sideband.n_ss,
                             fmt::format("{:.6e} vs {:.6e}", r.best_value, sideband.n_ss)});
    const double n0 = traj.trajectory.front().n_target;
    report.checks.push_back({"trajectory starts thermal",
                             std::abs(n0 - config.n_thermal) <= 1e-9 * std::max(1.0, config.n_thermal),
                             fmt::format("<a+a>(0) = {}", n0)});

    const std::string pulse_text = pulse_to_json(r.best_pulse).dump(2);
    const std::string again = pulse_to_json(pulse_from_json(Json::parse(pulse_text))).dump(2);
    report.checks.push_back({"pulse JSON round trip", again == pulse_text, ""});
    {
        const fs::path path = dir / "figure2_pulse.json";
        std::ofstream out(path);
        out << pulse_text << '\n';
        if (!out) throw ConfigError("cannot write " + path.string());
        report.outputs.push_back(path);
    }
    {
        const fs::path path = dir / "figure2_trajectory.csv";
        CsvWriter csv(path, {"time", "n_target", "n_aux", "g"});
        for (const TrajectoryPoint& p : traj.trajectory) {
            csv.row({num(p.time), num(p.n_target), num(p.n_aux.at(0)), num(r.best_pulse.value_at(0, p.time))});
        }
        report.outputs.push_back(path);
    }
    {
        const fs::path path = dir / "figure2_summary.json";
        write_json(path, {{"n_final", r.best_value},
                          {"n_sideband", sideband.n_ss},
                          {"g_sideband", sideband.g_opt},
                          {"improvement_factor", sideband.n_ss / r.best_value},
                          {"restarts_used", r.restarts_used},
                          {"best_restart", r.best_restart},
                          {"gradient_norm_final", r.gradient_norm_final},
                          {"wall_time", r.wall_time},
                          {"checks", checks_json(report.checks)}});
        report.outputs.push_back(path);
    }
    write_manifest(report, dir, to_json(config), config.seed, ctx, started, t0);
    if (outcome) *outcome = {std::move(r), sideband, std::move(traj)};
    return report;
}

RunReport run_naux_study(const NauxConfig& config_in, const RunContext& ctx, std::vector<NauxRow>* rows_out)
{
    const auto t0 = Clock::now();
    const std::string started = utc_timestamp();
    NauxConfig config = config_in;
    if (ctx.seed) config.search.seed = *ctx.seed;
    const fs::path dir = prepare_dir(config.output_path, ctx);
    config.output_path = dir;
    RunReport report{"naux", {}, {}};

    const std::vector<double> kappas = sorted(config.kappa_grid);
    const std::size_t per_kappa = config.n_aux_values.size();
    std::vector<NauxRow> rows(kappas.size() * per_kappa);

    parallel_for(kappas.size(), ctx.jobs, [&](std::size_t k) {
        std::vector<TimePoint> reference;
        for (std::size_t a = 0; a < per_kappa; ++a) {
            NauxRow& row = rows[k * per_kappa + a];
            row.kappa = kappas[k];
            row.n_aux = config.n_aux_values[a];
            try {
                const ModelParams params = make_params(config.gamma, config.n_thermal, {{row.kappa, row.n_aux}});
                const Objective objective =
                    Objective::occupation(params, 1, config.search.time_grid.front(), config.search.g_max);
                // Later n_aux values start from the first one's optimum at the same τ.
                WarmStarts warm;
                if (a > 0) {
                    warm = [&reference](double tau, std::size_t n) {
                        std::vector<RVector> out;
                        for (const TimePoint& tp : reference) {
                            if (tp.tau == tau && tp.error.empty() && tp.n_segments == n) out.push_back(tp.g_values);
                        }
                        return out;
                    };
                }
                std::vector<TimePoint> times = search_times(objective, config.search, warm);
                const std::size_t best = best_time(times);
                if (best == times.size()) throw OptimizationError("every total time failed");
                row.best = times[best];
                if (a == 0) reference = std::move(times);
            } catch (const std::exception& e) {
                row.error = e.what();
                row.best.n_cool = nan_value;
            }
            logger()->info("kappa {:.3e} n_aux {:.1e}: {:.4e}", row.kappa, row.n_aux, row.best.n_cool);
        }
    });

    std::size_t bad = 0, errors = 0;
    for (std::size_t k = 0; k < kappas.size(); ++k) {
        const NauxRow& ref = rows[k * per_kappa];
        for (std::size_t a = 0; a < per_kappa; ++a) {
            NauxRow& row = rows[k * per_kappa + a];
            row.shift = row.best.n_cool - ref.best.n_cool;
            if (!row.error.empty()) {
                ++errors;
                continue;
            }
            const double added = row.n_aux - ref.n_aux;
            if (a > 0 && added > 0.0 && !(row.shift >= 0.5 * added && row.shift <= 2.0 * added)) ++bad;
        }
    }
    report.checks.push_back({"occupation shift tracks n_aux", bad == 0,
                             fmt::format("{} shifts outside [0.5, 2] x added n_aux", bad)});
    report.checks.push_back({"every grid point computed", errors == 0, fmt::format("{} failed points", errors)});

    const fs::path path = dir / "naux.csv";
    CsvWriter csv(path, {"kappa", "n_aux", "tau", "n_segments", "n_cool", "shift", "g_values", "seed", "error"});
    for (const NauxRow& row : rows) {
        csv.row({num(row.kappa), num(row.n_aux), num(row.best.tau), std::to_string(row.best.n_segments),
                 num(row.best.n_cool), num(row.shift), num_list(row.best.g_values),
                 std::to_string(config.search.seed), row.error});
    }
    report.outputs.push_back(path);
    write_manifest(report, dir, to_json(config), config.search.seed, ctx, started, t0);
    if (rows_out) *rows_out = std::move(rows);
    return report;
}

RunReport run_two_aux(const TwoAuxConfig& config_in, const RunContext& ctx, std::vector<TwoAuxRow>* rows_out)
{
    const auto t0 = Clock::now();
    const std::string started = utc_timestamp();
    TwoAuxConfig config = config_in;
    if (ctx.seed) config.search.seed = *ctx.seed;
    const fs::path dir = prepare_dir(config.output_path, ctx);
    config.output_path = dir;
    RunReport report{"twoaux", {}, {}};

    const std::vector<double> kappas = sorted(config.kappa_grid);
    std::vector<TwoAuxRow> rows(kappas.size());
    parallel_for(kappas.size(), ctx.jobs, [&](std::size_t k) {
        TwoAuxRow& row = rows[k];
        row.kappa = kappas[k];
        row.n_two = row.n_two_zero_second = nan_value;
        try {
            const Auxiliary aux{row.kappa, config.n_aux};
            const ModelParams one = make_params(config.gamma, config.n_thermal, {aux});
            const std::vector<TimePoint> times = search_times(
                Objective::occupation(one, 1, config.search.time_grid.front(), config.search.g_max), config.search);
            const std::size_t best = best_time(times);
            if (best == times.size()) throw OptimizationError("every total time failed");
            row.single = times[best];
            row.tau = row.single.tau;

            const ModelParams two = make_params(config.gamma, config.n_thermal, {aux, aux});
            const Objective objective = Objective::occupation(two, row.single.n_segments, row.tau, config.search.g_max);
            RVector warm = RVector::Zero(static_cast<Eigen::Index>(objective.dimension()));
            warm.head(row.single.g_values.size()) = row.single.g_values;
            row.n_two_zero_second = evaluate(objective, warm);
            OptimizeOptions opt;
            opt.restarts = config.search.restarts;
            opt.seed = config.search.seed;
            opt.warm_starts = {warm};
            const OptimizationResult r = optimize(objective, opt);
            row.n_two = r.best_value;
            row.g_two = r.best_pulse.flat_values();
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        logger()->info("kappa {:.3e}: one auxiliary {:.4e}, two {:.4e}", row.kappa, row.single.n_cool, row.n_two);
    });

    std::size_t worse = 0, consistency = 0, large = 0, errors = 0;
    for (const TwoAuxRow& row : rows) {
        if (!row.error.empty()) {
            ++errors;
            continue;
        }
        if (row.n_two > row.single.n_cool * (1.0 + 1e-10)) ++worse;
        if (std::abs(row.n_two_zero_second - row.single.n_cool) > 1e-8 * row.single.n_cool) ++consistency;
        if (row.ratio() < 0.5) ++large;
    }
    report.checks.push_back({"two auxiliaries never worse than one", worse == 0, fmt::format("{} points", worse)});
    report.checks.push_back({"silent second auxiliary reproduces one", consistency == 0,
                             fmt::format("{} points", consistency)});
    report.checks.push_back({"no large gain from a second auxiliary", large == 0,
                             fmt::format("{} points with ratio below 0.5", large)});
    report.checks.push_back({"every grid point computed", errors == 0, fmt::format("{} failed points", errors)});

    const fs::path path = dir / "twoaux.csv";
    CsvWriter csv(path, {"kappa", "tau", "n_segments", "n_cool_single", "n_cool_two", "ratio",
                         "n_cool_two_zero_second", "g_single", "g_two", "seed", "error"});
    for (const TwoAuxRow& row : rows) {
        csv.row({num(row.kappa), num(row.tau), std::to_string(row.single.n_segments), num(row.single.n_cool),
                 num(row.n_two), num(row.error.empty() ? row.ratio() : nan_value), num(row.n_two_zero_second),
                 num_list(row.single.g_values), num_list(row.g_two), std::to_string(config.search.seed), row.error});
    }
    report.outputs.push_back(path);
    write_manifest(report, dir, to_json(config), config.search.seed, ctx, started, t0);
    if (rows_out) *rows_out = std::move(rows);
    return report;
}

RunReport run_sideband(const SidebandConfig& config_in, const RunContext& ctx,
                       std::vector<std::vector<SidebandPoint>>* curves_out)
{
    SidebandConfig config = config_in;
    const auto t0 = Clock::now();
    const std::string started = utc_timestamp();
    const fs::path dir = prepare_dir(config.output_path, ctx);
    config.output_path = dir;
    RunReport report{"sideband", {}, {}};

    const std::vector<double> panels = sorted(config.gamma_n_thermal);
    const std::vector<double> kappas = sorted(config.kappa_grid);
    std::vector<std::vector<SidebandPoint>> curves;
    const fs::path path = dir / "sideband.csv";
    CsvWriter csv(path, {"gamma_n_thermal", "kappa", "g_opt", "n_ss", "n_rwa_swap"});
    for (double gn : panels) {
        const ModelParams params = make_params(gn / config.n_thermal, config.n_thermal, {{kappas.front(), config.n_aux}});
        std::vector<SidebandPoint> curve = sideband_curve(params, kappas, config.g_grid, ctx.jobs);
        std::size_t best = 0;
        for (std::size_t i = 0; i < curve.size(); ++i) {
            const SidebandPoint& p = curve[i];
            const ModelParams at = make_params(gn / config.n_thermal, config.n_thermal, {{p.kappa, config.n_aux}});
            csv.row({num(gn), num(p.kappa), num(p.g_opt), num(p.n_ss), num(rwa_swap_cool(at, p.g_opt))});
            if (p.n_ss < curve[best].n_ss) best = i;
        }
        logger()->info("gamma*n_T {:.1e}: best sideband {:.4e} at kappa {:.3e}", gn, curve[best].n_ss,
                       curve[best].kappa);
        curves.push_back(std::move(curve));
    }
    report.outputs.push_back(path);
    write_manifest(report, dir, to_json(config), 0, ctx, started, t0);
    if (curves_out) *curves_out = std::move(curves);
    return report;
}

RunReport run_experiment(const std::string& experiment, const Json& config_in, const RunContext& ctx)
{
    const Json* config = &config_in;
    if (config_in.is_object() && config_in.contains("manifest")) {
        if (!config_in.contains("config")) throw ConfigError("manifest has no config");
        config = &config_in.at("config");
    }
    if (experiment == "swap") return run_swap(parse_swap(*config), ctx);
    if (experiment == "figure1") return run_figure1(parse_figure1(*config), ctx);
    if (experiment == "figure2") return run_figure2(parse_figure2(*config), ctx);
    if (experiment == "naux") return run_naux_study(parse_naux(*config), ctx);
    if (experiment == "twoaux") return run_two_aux(parse_two_aux(*config), ctx);
    if (experiment == "sideband") return run_sideband(parse_sideband(*config), ctx);
    throw ConfigError("unknown experiment '" + experiment + "'");
}

} // namespace cool
