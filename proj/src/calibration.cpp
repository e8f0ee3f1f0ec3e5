#include "vibreau/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "vibreau/errors.hpp"

namespace vibreau::calibration {

namespace {

constexpr double kSettleSeconds = 1.0;

}  // namespace

std::string_view to_string(MotionKind kind) {
    switch (kind) {
        case MotionKind::sway: return "sway";
        case MotionKind::shake: return "shake";
        case MotionKind::swirl: return "swirl";
    }
    return "sway";
}

MotionKind motion_kind_from_string(std::string_view text) {
    if (text == "sway") return MotionKind::sway;
    if (text == "shake") return MotionKind::shake;
    if (text == "swirl") return MotionKind::swirl;
    throw InputError("unknown motion kind '" + std::string(text) + "'");
}

void validate(const MotionSpec& spec) {
    if (!(spec.amplitude >= 0.0)) throw ConfigError("motion amplitude must be >= 0");
    if (!(spec.frequency >= 0.0)) throw ConfigError("motion frequency must be >= 0");
    if (!(spec.duration > 0.0)) throw ConfigError("motion duration must be positive");
}

PoseSample motion_pose(const MotionSpec& spec, double t) {
    const double arg = 2.0 * std::numbers::pi * spec.frequency * t + spec.phase;
    const double a = spec.amplitude;
    PoseSample pose;
    pose.t = t;
    switch (spec.kind) {
        case MotionKind::sway: pose.position = {a * std::sin(arg), 0.0, 0.0}; break;
        case MotionKind::shake: pose.position = {0.0, 0.0, a * std::sin(arg)}; break;
        case MotionKind::swirl: pose.position = {a * std::cos(arg), a * std::sin(arg), 0.0}; break;
    }
    return pose;
}

Trajectory generate_motion(const MotionSpec& spec, double timestep, double t0) {
    validate(spec);
    if (!(timestep > 0.0)) throw ConfigError("timestep must be positive");
    const long long n = std::llround(spec.duration / timestep);
    Trajectory out;
    out.reserve(static_cast<std::size_t>(n));
    for (long long k = 0; k < n; ++k) {
        const double local = static_cast<double>(k) * timestep;
        PoseSample pose = motion_pose(spec, local);
        pose.t = t0 + local;
        out.push_back(pose);
    }
    return out;
}

Trajectory concatenate(std::span<const MotionSpec> mix, double timestep) {
    Trajectory out;
    for (const MotionSpec& spec : mix) {
        const double t0 = out.empty() ? 0.0 : out.back().t + timestep;
        Trajectory part = generate_motion(spec, timestep, t0);
        if (!out.empty() && !part.empty()) {
            const Vec3 offset = out.back().position - part.front().position;
            for (auto& pose : part) pose.position += offset;
        }
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

double percentile(std::span<const double> values, double q) {
    if (values.empty()) throw InputError("percentile of an empty list");
    if (!(q >= 0.0 && q <= 1.0)) throw InputError("percentile fraction must lie in [0, 1]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = static_cast<std::size_t>(std::ceil(h));
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<MotionSpec> default_mix(double total_seconds) {
    constexpr MotionKind kinds[] = {MotionKind::sway, MotionKind::shake, MotionKind::swirl};
    constexpr double amplitudes[] = {0.02, 0.05, 0.1};
    constexpr double frequencies[] = {0.3, 1.0, 2.0};
    const double each = total_seconds / 27.0;
    std::vector<MotionSpec> mix;
    for (MotionKind kind : kinds) {
        for (double a : amplitudes) {
            for (double f : frequencies) mix.push_back({kind, a, f, each, 0.0});
        }
    }
    return mix;
}

double total_duration(std::span<const MotionSpec> mix) {
    double sum = 0.0;
    for (const auto& m : mix) sum += m.duration;
    return sum;
}

std::vector<double> acceleration_samples(const vessel::VesselProfile& profile,
                                         fluid::FluidParams params,
                                         std::span<const MotionSpec> mix, std::uint64_t seed) {
    params.seed = seed;
    const Trajectory poses = concatenate(mix, params.timestep);
    fluid::FluidState state = fluid::spawn(profile, params);

    // The last two settling samples seed the difference stencil so every pose yields a value.
    fluid::settle(state, params, profile, kSettleSeconds - 2.0 * params.timestep);
    const fluid::FrameDrive rest{{}, {0.0, 0.0, -params.gravity}};
    std::array<Vec3, 3> window{};
    for (int k = 0; k < 2; ++k) {
        state = fluid::step(state, params, profile, rest);
        window[static_cast<std::size_t>(k + 1)] = fluid::center_of_gravity(state);
    }

    std::vector<double> samples;
    samples.reserve(poses.size());
    for (std::size_t k = 0; k < poses.size(); ++k) {
        state = fluid::step(state, params, profile,
                            fluid::drive_at(poses, k, params.timestep, params.gravity));
        window = {window[1], window[2], fluid::center_of_gravity(state)};
        samples.push_back(norm(window[2] - 2.0 * window[1] + window[0]));
    }
    return samples;
}

ThresholdReport summarize(std::span<const double> samples, std::uint64_t seed) {
    ThresholdReport r;
    r.p25 = percentile(samples, 0.25);
    r.p50 = percentile(samples, 0.50);
    r.p75 = percentile(samples, 0.75);
    r.p90 = percentile(samples, 0.90);
    r.selected = r.p25;
    r.sample_count = static_cast<long long>(samples.size());
    r.seed = seed;
    return r;
}

ThresholdReport calibrate(const vessel::VesselProfile& profile, const fluid::FluidParams& params,
                          std::span<const MotionSpec> mix, std::uint64_t seed) {
    for (const auto& m : mix) validate(m);
    if (total_duration(mix) < kMinimumMixSeconds - 1e-9) {
        throw ConfigError("calibration mix must cover at least 60 s of motion");
    }
    const auto samples = acceleration_samples(profile, params, mix, seed);
    return summarize(samples, seed);
}

std::string report_to_json(const ThresholdReport& report) {
    nlohmann::json doc{{"p25", report.p25},
                       {"p50", report.p50},
                       {"p75", report.p75},
                       {"p90", report.p90},
                       {"selected", report.selected},
                       {"sample_count", report.sample_count},
                       {"seed", report.seed},
                       {"unit", "m/step^2"}};
    return doc.dump(2);
}

ThresholdReport report_from_json(std::string_view text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        ThresholdReport r;
        r.p25 = doc.at("p25").get<double>();
        r.p50 = doc.at("p50").get<double>();
        r.p75 = doc.at("p75").get<double>();
        r.p90 = doc.at("p90").get<double>();
        r.selected = doc.at("selected").get<double>();
        r.sample_count = doc.value("sample_count", 0LL);
        r.seed = doc.value("seed", std::uint64_t{0});
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("threshold report: ") + e.what());
    }
}

}  // namespace vibreau::calibration
