#include <cool/model.hpp>
#include <cool/errors.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace cool {
namespace {

void require_nonnegative(double value, const std::string& field)
{
    if (!std::isfinite(value)) throw ValidationError(field, "must be finite");
    if (value < 0.0) throw ValidationError(field, "must be nonnegative, got " + std::to_string(value));
}

} // namespace

ModelParams make_params(double gamma, double n_thermal, std::span<const Auxiliary> aux)
{
    require_nonnegative(gamma, "gamma");
    require_nonnegative(n_thermal, "n_T");
    if (aux.empty() || aux.size() > 2) {
        throw UnsupportedError("only one or two auxiliaries are supported, got " +
                               std::to_string(aux.size()));
    }
    for (std::size_t j = 0; j < aux.size(); ++j) {
        const auto idx = "[" + std::to_string(j) + "]";
        require_nonnegative(aux[j].kappa, "kappa" + idx);
        require_nonnegative(aux[j].n_aux, "n_aux" + idx);
    }
    return ModelParams(gamma, n_thermal, std::vector<Auxiliary>(aux.begin(), aux.end()));
}

ModelParams with_auxiliaries(const ModelParams& params, std::span<const Auxiliary> aux)
{
    return make_params(params.gamma(), params.n_thermal(), aux);
}

ControlPulse::ControlPulse(std::vector<std::vector<Segment>> channels)
    : channels_(std::move(channels))
{
    if (channels_.empty()) throw ValidationError("channels", "pulse needs at least one channel");
    for (std::size_t c = 0; c < channels_.size(); ++c) {
        const auto& segs = channels_[c];
        if (segs.empty()) throw ValidationError("channels", "channel " + std::to_string(c) + " has no segments");
        double total = 0.0;
        for (const auto& s : segs) {
            if (!std::isfinite(s.g)) throw ValidationError("g", "non-finite coupling value");
            if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
                throw ValidationError("duration", "segment durations must be positive");
            }
            total += s.duration;
        }
        if (c == 0) {
            total_time_ = total;
        } else if (std::abs(total - total_time_) > 1e-12 * total_time_) {
            throw ValidationError("total_time", "channels disagree on total time");
        }
    }
}

ControlPulse::ControlPulse(std::vector<std::vector<Segment>> channels, double total_time)
    : ControlPulse(std::move(channels))
{
    if (std::abs(total_time - total_time_) > 1e-12 * total_time_) {
        throw ValidationError("total_time", "does not match the segment durations");
    }
    total_time_ = total_time;
}

ControlPulse ControlPulse::uniform(const RMatrix& values, double total_time)
{
    if (!(total_time > 0.0) || !std::isfinite(total_time)) {
        throw ValidationError("total_time", "must be positive");
    }
    if (values.rows() < 1 || values.cols() < 1) throw ValidationError("values", "empty pulse");
    const double dt = total_time / static_cast<double>(values.cols());
    std::vector<std::vector<Segment>> channels(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index c = 0; c < values.rows(); ++c) {
        for (Eigen::Index k = 0; k < values.cols(); ++k) {
            channels[static_cast<std::size_t>(c)].push_back({values(c, k), dt});
        }
    }
    ControlPulse pulse(std::move(channels));
    pulse.total_time_ = total_time;
    return pulse;
}

ControlPulse ControlPulse::uniform(std::span<const double> values, double total_time)
{
    RMatrix m(1, static_cast<Eigen::Index>(values.size()));
    for (std::size_t k = 0; k < values.size(); ++k) m(0, static_cast<Eigen::Index>(k)) = values[k];
    return uniform(m, total_time);
}

ControlPulse ControlPulse::constant(double g, double total_time, std::size_t channels)
{
    return uniform(RMatrix::Constant(static_cast<Eigen::Index>(channels), 1, g), total_time);
}

double ControlPulse::value_at(std::size_t c, double t) const
{
    const auto& segs = channels_.at(c);
    double start = 0.0;
    for (const auto& s : segs) {
        if (t < start + s.duration) return s.g;
        start += s.duration;
    }
    return segs.back().g;
}

bool ControlPulse::is_uniform() const
{
    const auto n = channels_.front().size();
    const double dt = total_time_ / static_cast<double>(n);
    for (const auto& segs : channels_) {
        if (segs.size() != n) return false;
        for (const auto& s : segs) {
            if (std::abs(s.duration - dt) > 1e-12 * dt) return false;
        }
    }
    return true;
}

RMatrix ControlPulse::values() const
{
    if (!is_uniform()) throw DomainError("values() requires equal-duration aligned segments");
    const auto n = static_cast<Eigen::Index>(channels_.front().size());
    RMatrix m(static_cast<Eigen::Index>(channels_.size()), n);
    for (std::size_t c = 0; c < channels_.size(); ++c) {
        for (Eigen::Index k = 0; k < n; ++k) m(static_cast<Eigen::Index>(c), k) = channels_[c][static_cast<std::size_t>(k)].g;
    }
    return m;
}

RVector ControlPulse::flat_values() const
{
    std::vector<double> flat;
    for (const auto& segs : channels_) {
        for (const auto& s : segs) flat.push_back(s.g);
    }
    return Eigen::Map<const RVector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

std::vector<double> ControlPulse::breakpoints() const
{
    std::vector<double> points{0.0};
    for (const auto& segs : channels_) {
        double t = 0.0;
        for (std::size_t k = 0; k + 1 < segs.size(); ++k) {
            t += segs[k].duration;
            points.push_back(t);
        }
    }
    points.push_back(total_time_);
    std::sort(points.begin(), points.end());
    // Merge breakpoints that coincide up to summation round-off.
    std::vector<double> merged{points.front()};
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i] - merged.back() > 1e-12 * total_time_) merged.push_back(points[i]);
    }
    merged.back() = total_time_;
    return merged;
}

ControlPulse pulse_resample(const ControlPulse& pulse, std::size_t n_segments)
{
    for (std::size_t c = 0; c < pulse.num_channels(); ++c) {
        if (n_segments < pulse.num_segments(c)) {
            throw DomainError("pulse_resample only refines: requested " + std::to_string(n_segments) +
                              " segments, channel has " + std::to_string(pulse.num_segments(c)));
        }
    }
    const double tau = pulse.total_time();
    const double dt = tau / static_cast<double>(n_segments);
    RMatrix values(static_cast<Eigen::Index>(pulse.num_channels()), static_cast<Eigen::Index>(n_segments));
    for (std::size_t c = 0; c < pulse.num_channels(); ++c) {
        for (std::size_t k = 0; k < n_segments; ++k) {
            const double mid = (static_cast<double>(k) + 0.5) * dt;
            values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = pulse.value_at(c, mid);
        }
    }
    return ControlPulse::uniform(values, tau);
}

CoolingMetrics metrics_from_occupation(double n_cool, const ModelParams& params)
{
    if (!(n_cool > 0.0)) throw DomainError("cooling metrics need n_cool > 0");
    if (!(params.n_thermal() > 0.0)) throw DomainError("cooling metrics need n_T > 0");
    CoolingMetrics m;
    m.n_cool = n_cool;
    m.f_cool = params.n_thermal() / n_cool;
    m.gamma_eff = params.gamma() * params.n_thermal() / n_cool;
    return m;
}

} // namespace cool
