#include <cool/errors.hpp>
#include <cool/experiment.hpp>

#include <algorithm>
#include <cmath>
#include <set>

static_assert(std::is_same_v<std::uint64_t, unsigned long> && std::is_same_v<std::size_t, unsigned long>,
              "seeds are parsed as size_t");

namespace cool {
namespace {

// Hands out the keys of one JSON object and rejects whatever is left over.
class Fields
{
public:
    Fields(const Json& j, std::string where) : j_(j), where_(std::move(where))
    {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    Fields(const Fields&) = delete;
    Fields& operator=(const Fields&) = delete;

    const Json* find(const std::string& key)
    {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    template <class T>
    void get(const std::string& key, T& out)
    {
        if (const Json* v = find(key)) out = convert<T>(*v, where_ + "." + key);
    }

    template <class T>
    void require(const std::string& key, T& out)
    {
        const Json* v = find(key);
        if (v == nullptr) throw ConfigError(where_ + ": missing required key '" + key + "'");
        out = convert<T>(*v, where_ + "." + key);
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.contains(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
        }
    }

    const std::string& where() const { return where_; }

    template <class T>
    static T convert(const Json& v, const std::string& where);

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> used_;
};

template <>
double Fields::convert<double>(const Json& v, const std::string& where)
{
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + ": must be finite");
    return x;
}

template <>
std::size_t Fields::convert<std::size_t>(const Json& v, const std::string& where)
{
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(where + ": expected a non-negative integer");
    }
    return v.get<std::size_t>();
}

template <>
int Fields::convert<int>(const Json& v, const std::string& where)
{
    if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
    return v.get<int>();
}

template <>
bool Fields::convert<bool>(const Json& v, const std::string& where)
{
    if (!v.is_boolean()) throw ConfigError(where + ": expected true or false");
    return v.get<bool>();
}

template <>
std::string Fields::convert<std::string>(const Json& v, const std::string& where)
{
    if (!v.is_string()) throw ConfigError(where + ": expected a string");
    return v.get<std::string>();
}

template <>
std::filesystem::path Fields::convert<std::filesystem::path>(const Json& v, const std::string& where)
{
    return convert<std::string>(v, where);
}

template <>
std::vector<double> Fields::convert<std::vector<double>>(const Json& v, const std::string& where)
{
    if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<double>(v[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

template <>
std::array<Eigen::Index, 2> Fields::convert<std::array<Eigen::Index, 2>>(const Json& v, const std::string& where)
{
    if (!v.is_array() || v.size() != 2) throw ConfigError(where + ": expected [target, auxiliary]");
    std::array<Eigen::Index, 2> out{};
    for (std::size_t i = 0; i < 2; ++i) {
        out[i] = static_cast<Eigen::Index>(convert<std::size_t>(v[i], where));
        if (out[i] < 2) throw ConfigError(where + ": cutoffs must be at least 2");
    }
    return out;
}

void require_positive(double x, const std::string& where)
{
    if (!(x > 0.0)) throw ConfigError(where + ": must be positive");
}

void require_nonnegative(double x, const std::string& where)
{
    if (!(x >= 0.0)) throw ConfigError(where + ": must be non-negative");
}

void require_positive_list(const std::vector<double>& xs, const std::string& where)
{
    if (xs.empty()) throw ConfigError(where + ": must not be empty");
    for (double x : xs) require_positive(x, where);
}

void check_experiment(Fields& f, const std::string& name)
{
    std::string experiment = name;
    f.get("experiment", experiment);
    if (experiment != name) {
        throw ConfigError("config is for '" + experiment + "', not '" + name + "'");
    }
}

// Array of values, or {"min", "max", "points"} / {"min", "max", "per_decade"}
// for a log-spaced grid.
std::vector<double> parse_grid(const Json& v, const std::string& where)
{
    if (v.is_array()) return Fields::convert<std::vector<double>>(v, where);
    Fields f(v, where);
    double lo = 0.0, hi = 0.0;
    f.require("min", lo);
    f.require("max", hi);
    std::size_t points = 0;
    double per_decade = 0.0;
    f.get("points", points);
    f.get("per_decade", per_decade);
    f.finish();
    if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError(where + ": need 0 < min <= max");
    if ((points > 0) == (per_decade > 0.0)) throw ConfigError(where + ": give exactly one of points, per_decade");
    if (per_decade > 0.0) {
        points = static_cast<std::size_t>(std::lround(per_decade * std::log10(hi / lo))) + 1;
    }
    return log_grid(lo, hi, points);
}

std::vector<double> grid_field(Fields& f, const std::string& key, std::vector<double> fallback)
{
    if (const Json* v = f.find(key)) fallback = parse_grid(*v, f.where() + "." + key);
    return fallback;
}

CouplingGrid parse_coupling_grid(Fields& parent)
{
    CouplingGrid grid;
    const Json* v = parent.find("g_grid");
    if (v == nullptr) return grid;
    Fields f(*v, parent.where() + ".g_grid");
    f.get("g_min", grid.g_min);
    f.get("g_max", grid.g_max);
    f.get("points", grid.points);
    f.get("rel_tol", grid.rel_tol);
    f.finish();
    if (!(grid.g_min > 0.0) || !(grid.g_max > grid.g_min) || grid.points < 2 || !(grid.rel_tol > 0.0)) {
        throw ConfigError(f.where() + ": need 0 < g_min < g_max, points >= 2, rel_tol > 0");
    }
    return grid;
}

Json coupling_grid_json(const CouplingGrid& g)
{
    return {{"g_min", g.g_min}, {"g_max", g.g_max}, {"points", g.points}, {"rel_tol", g.rel_tol}};
}

void parse_search(Fields& f, SearchSettings& s, bool need_time_grid)
{
    if (const Json* v = f.find("time_grid")) s.time_grid = parse_grid(*v, f.where() + ".time_grid");
    f.get("segments_per_period", s.segments.segments_per_period);
    f.get("min_segments", s.segments.min_segments);
    f.get("restarts", s.restarts);
    f.get("seed", s.seed);
    f.get("g_max", s.g_max);
    if (need_time_grid) require_positive_list(s.time_grid, f.where() + ".time_grid");
    require_nonnegative(s.segments.segments_per_period, f.where() + ".segments_per_period");
    if (s.segments.min_segments < 1) throw ConfigError(f.where() + ".min_segments: must be at least 1");
    require_positive(s.g_max, f.where() + ".g_max");
}

void search_json(Json& j, const SearchSettings& s, bool with_time_grid)
{
    if (with_time_grid) j["time_grid"] = s.time_grid;
    j["segments_per_period"] = s.segments.segments_per_period;
    j["min_segments"] = s.segments.min_segments;
    j["restarts"] = s.restarts;
    j["seed"] = s.seed;
    j["g_max"] = s.g_max;
}

struct ParamFields
{
    double* gamma = nullptr;
    double* n_thermal = nullptr;
    double* n_aux = nullptr;
    double* kappa = nullptr;
};

void parse_params(Fields& parent, ParamFields p)
{
    const Json* v = parent.find("params");
    if (v == nullptr) return;
    Fields f(*v, parent.where() + ".params");
    if (p.gamma) f.get("gamma", *p.gamma);
    if (p.n_thermal) f.get("n_thermal", *p.n_thermal);
    if (p.n_aux) f.get("n_aux", *p.n_aux);
    if (p.kappa) f.get("kappa", *p.kappa);
    f.finish();
    for (double* x : {p.gamma, p.n_thermal, p.n_aux, p.kappa}) {
        if (x) require_nonnegative(*x, f.where());
    }
}

} // namespace

std::size_t Segmentation::count(double total_time) const
{
    const double n = std::ceil(segments_per_period * total_time - 1e-9);
    return std::max(min_segments, static_cast<std::size_t>(std::max(n, 0.0)));
}

std::vector<double> log_grid(double lo, double hi, std::size_t points)
{
    if (points == 0) return {};
    if (points == 1) return {lo};
    std::vector<double> out(points);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < points; ++i) {
        out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

Json pulse_to_json(const ControlPulse& pulse)
{
    Json channels = Json::array();
    for (std::size_t c = 0; c < pulse.num_channels(); ++c) {
        Json segs = Json::array();
        for (const Segment& s : pulse.channel(c)) segs.push_back({{"duration", s.duration}, {"g", s.g}});
        channels.push_back(std::move(segs));
    }
    return {{"channels", std::move(channels)}, {"total_time", pulse.total_time()}};
}

ControlPulse pulse_from_json(const Json& j)
{
    Fields f(j, "pulse");
    const Json* channels = f.find("channels");
    double total_time = 0.0;
    f.require("total_time", total_time);
    f.finish();
    if (channels == nullptr || !channels->is_array()) throw ConfigError("pulse.channels: expected an array");
    std::vector<std::vector<Segment>> out;
    for (std::size_t c = 0; c < channels->size(); ++c) {
        const Json& segs = (*channels)[c];
        const std::string where = "pulse.channels[" + std::to_string(c) + "]";
        if (!segs.is_array()) throw ConfigError(where + ": expected an array of segments");
        std::vector<Segment> channel;
        for (std::size_t k = 0; k < segs.size(); ++k) {
            Fields s(segs[k], where + "[" + std::to_string(k) + "]");
            Segment seg;
            s.require("g", seg.g);
            s.require("duration", seg.duration);
            s.finish();
            channel.push_back(seg);
        }
        out.push_back(std::move(channel));
    }
    try {
        return ControlPulse(std::move(out), total_time);
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("pulse: ") + e.what());
    }
}

SwapConfig parse_swap(const Json& j)
{
    SwapConfig c;
    Fields f(j, "config");
    check_experiment(f, "swap");
    f.get("cutoffs", c.cutoffs);
    if (const Json* cases = f.find("checks")) {
        if (!cases->is_array()) throw ConfigError("config.checks: expected an array");
        for (std::size_t i = 0; i < cases->size(); ++i) {
            Fields cf((*cases)[i], "config.checks[" + std::to_string(i) + "]");
            SwapCase sc;
            cf.require("values", sc.values);
            cf.require("total_time", sc.total_time);
            cf.require("expected_purity", sc.expected_purity);
            cf.finish();
            if (sc.values.empty()) throw ConfigError(cf.where() + ".values: must not be empty");
            require_positive(sc.total_time, cf.where() + ".total_time");
            c.cases.push_back(std::move(sc));
        }
    } else {
        c.cases = {{{1.78, 1.45, 2.44, 1.61, 0.195}, 1.0, 0.999977},
                   {{2.76, 0.474, 3.73, 0.78, 2.59}, 0.7, 0.999991}};
    }
    f.get("tolerance", c.tolerance);
    f.get("optimize", c.optimize);
    f.get("n_segments", c.n_segments);
    f.get("total_time", c.total_time);
    f.get("restarts", c.restarts);
    f.get("seed", c.seed);
    f.get("g_max", c.g_max);
    f.get("target_purity", c.target_purity);
    f.get("output_path", c.output_path);
    f.finish();
    require_positive(c.tolerance, "config.tolerance");
    require_positive(c.total_time, "config.total_time");
    require_positive(c.g_max, "config.g_max");
    if (c.n_segments < 1 || c.restarts < 1) throw ConfigError("config: n_segments and restarts must be at least 1");
    if (c.cutoffs[0] < 12) throw ConfigError("config.cutoffs: the target needs at least 12 levels");
    return c;
}

Json to_json(const SwapConfig& c)
{
    Json cases = Json::array();
    for (const SwapCase& s : c.cases) {
        cases.push_back({{"values", s.values}, {"total_time", s.total_time}, {"expected_purity", s.expected_purity}});
    }
    return {{"experiment", "swap"},
            {"cutoffs", c.cutoffs},
            {"checks", cases},
            {"tolerance", c.tolerance},
            {"optimize", c.optimize},
            {"n_segments", c.n_segments},
            {"total_time", c.total_time},
            {"restarts", c.restarts},
            {"seed", c.seed},
            {"g_max", c.g_max},
            {"target_purity", c.target_purity},
            {"output_path", c.output_path.string()}};
}

Figure1Config parse_figure1(const Json& j)
{
    Figure1Config c;
    Fields f(j, "config");
    check_experiment(f, "figure1");
    parse_params(f, {.n_thermal = &c.n_thermal, .n_aux = &c.n_aux});
    const Json* panels = f.find("panels");
    c.kappa_grid = grid_field(f, "kappa_grid", log_grid(1e-4, 1.0, 49));
    parse_search(f, c.search, false);
    c.g_grid = parse_coupling_grid(f);
    f.get("dominance_slack", c.dominance_slack);
    f.get("output_path", c.output_path);
    f.finish();

    if (panels == nullptr || !panels->is_array() || panels->empty()) {
        throw ConfigError("config.panels: expected a non-empty array");
    }
    for (std::size_t i = 0; i < panels->size(); ++i) {
        Fields pf((*panels)[i], "config.panels[" + std::to_string(i) + "]");
        Panel p;
        pf.require("gamma_n_thermal", p.gamma_n_thermal);
        p.time_grid = grid_field(pf, "time_grid", c.search.time_grid);
        pf.finish();
        require_positive(p.gamma_n_thermal, pf.where() + ".gamma_n_thermal");
        require_positive_list(p.time_grid, pf.where() + ".time_grid");
        c.panels.push_back(std::move(p));
    }
    require_positive(c.n_thermal, "config.params.n_thermal");
    require_positive_list(c.kappa_grid, "config.kappa_grid");
    require_nonnegative(c.dominance_slack, "config.dominance_slack");
    return c;
}

Json to_json(const Figure1Config& c)
{
    Json panels = Json::array();
    for (const Panel& p : c.panels) panels.push_back({{"gamma_n_thermal", p.gamma_n_thermal}, {"time_grid", p.time_grid}});
    Json j = {{"experiment", "figure1"},
              {"params", {{"n_thermal", c.n_thermal}, {"n_aux", c.n_aux}}},
              {"panels", panels},
              {"kappa_grid", c.kappa_grid},
              {"g_grid", coupling_grid_json(c.g_grid)},
              {"dominance_slack", c.dominance_slack},
              {"output_path", c.output_path.string()}};
    search_json(j, c.search, false);
    return j;
}

Figure2Config parse_figure2(const Json& j)
{
    Figure2Config c;
    Fields f(j, "config");
    check_experiment(f, "figure2");
    parse_params(f, {.gamma = &c.gamma, .n_thermal = &c.n_thermal, .n_aux = &c.n_aux, .kappa = &c.kappa});
    f.get("n_segments", c.n_segments);
    f.get("total_time", c.total_time);
    f.get("restarts", c.restarts);
    f.get("seed", c.seed);
    f.get("g_max", c.g_max);
    f.get("samples_per_period", c.samples_per_period);
    c.g_grid = parse_coupling_grid(f);
    f.get("output_path", c.output_path);
    f.finish();
    if (c.n_segments < 1) throw ConfigError("config.n_segments: must be at least 1");
    require_positive(c.total_time, "config.total_time");
    require_positive(c.g_max, "config.g_max");
    if (c.samples_per_period < 1) throw ConfigError("config.samples_per_period: must be at least 1");
    return c;
}

Json to_json(const Figure2Config& c)
{
    return {{"experiment", "figure2"},
            {"params", {{"gamma", c.gamma}, {"n_thermal", c.n_thermal}, {"n_aux", c.n_aux}, {"kappa", c.kappa}}},
            {"n_segments", c.n_segments},
            {"total_time", c.total_time},
            {"restarts", c.restarts},
            {"seed", c.seed},
            {"g_max", c.g_max},
            {"samples_per_period", c.samples_per_period},
            {"g_grid", coupling_grid_json(c.g_grid)},
            {"output_path", c.output_path.string()}};
}

NauxConfig parse_naux(const Json& j)
{
    NauxConfig c;
    c.search.time_grid = {0.6, 0.7, 0.8, 1.0, 1.5, 2.0};
    Fields f(j, "config");
    check_experiment(f, "naux");
    parse_params(f, {.gamma = &c.gamma, .n_thermal = &c.n_thermal});
    c.kappa_grid = grid_field(f, "kappa_grid", log_grid(1e-4, 1e-3, 5));
    f.get("n_aux_values", c.n_aux_values);
    parse_search(f, c.search, true);
    f.get("output_path", c.output_path);
    f.finish();
    require_positive_list(c.kappa_grid, "config.kappa_grid");
    if (c.n_aux_values.empty()) throw ConfigError("config.n_aux_values: must not be empty");
    for (double n : c.n_aux_values) require_nonnegative(n, "config.n_aux_values");
    return c;
}

Json to_json(const NauxConfig& c)
{
    Json j = {{"experiment", "naux"},
              {"params", {{"gamma", c.gamma}, {"n_thermal", c.n_thermal}}},
              {"kappa_grid", c.kappa_grid},
              {"n_aux_values", c.n_aux_values},
              {"output_path", c.output_path.string()}};
    search_json(j, c.search, true);
    return j;
}

TwoAuxConfig parse_two_aux(const Json& j)
{
    TwoAuxConfig c;
    c.search.time_grid = {0.7, 1.0};
    Fields f(j, "config");
    check_experiment(f, "twoaux");
    parse_params(f, {.gamma = &c.gamma, .n_thermal = &c.n_thermal, .n_aux = &c.n_aux});
    c.kappa_grid = grid_field(f, "kappa_grid", log_grid(1e-4, 1e-2, 3));
    parse_search(f, c.search, true);
    f.get("output_path", c.output_path);
    f.finish();
    require_positive_list(c.kappa_grid, "config.kappa_grid");
    return c;
}

Json to_json(const TwoAuxConfig& c)
{
    Json j = {{"experiment", "twoaux"},
              {"params", {{"gamma", c.gamma}, {"n_thermal", c.n_thermal}, {"n_aux", c.n_aux}}},
              {"kappa_grid", c.kappa_grid},
              {"output_path", c.output_path.string()}};
    search_json(j, c.search, true);
    return j;
}

SidebandConfig parse_sideband(const Json& j)
{
    SidebandConfig c;
    c.gamma_n_thermal = {1e-4, 1e-3, 1e-2, 1.0};
    Fields f(j, "config");
    check_experiment(f, "sideband");
    parse_params(f, {.n_thermal = &c.n_thermal, .n_aux = &c.n_aux});
    f.get("gamma_n_thermal", c.gamma_n_thermal);
    c.kappa_grid = grid_field(f, "kappa_grid", log_grid(1e-4, 1.0, 49));
    c.g_grid = parse_coupling_grid(f);
    f.get("output_path", c.output_path);
    f.finish();
    require_positive(c.n_thermal, "config.params.n_thermal");
    require_positive_list(c.gamma_n_thermal, "config.gamma_n_thermal");
    require_positive_list(c.kappa_grid, "config.kappa_grid");
    return c;
}

Json to_json(const SidebandConfig& c)
{
    return {{"experiment", "sideband"},
            {"params", {{"n_thermal", c.n_thermal}, {"n_aux", c.n_aux}}},
            {"gamma_n_thermal", c.gamma_n_thermal},
            {"kappa_grid", c.kappa_grid},
            {"g_grid", coupling_grid_json(c.g_grid)},
            {"output_path", c.output_path.string()}};
}

} // namespace cool
