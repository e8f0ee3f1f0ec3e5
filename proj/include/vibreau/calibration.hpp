#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vibreau/fluid.hpp"
#include "vibreau/pose.hpp"
#include "vibreau/vessel.hpp"

namespace vibreau::calibration {

/// Canonical handheld motions: sway is side to side along x, shake is up and down
/// along z, swirl is a horizontal circle.
enum class MotionKind { sway, shake, swirl };

std::string_view to_string(MotionKind kind);
MotionKind motion_kind_from_string(std::string_view text);

struct MotionSpec {
    MotionKind kind = MotionKind::sway;
    double amplitude = 0.0;  // m
    double frequency = 0.0;  // Hz
    double duration = 1.0;   // s
    double phase = 0.0;      // rad
};

void validate(const MotionSpec& spec);

/// Pose at time t (seconds from the start of the motion), identity orientation.
PoseSample motion_pose(const MotionSpec& spec, double t);

/// round(duration / timestep) samples at t0 + k * timestep.
Trajectory generate_motion(const MotionSpec& spec, double timestep, double t0 = 0.0);

/// Chains motions back to back on one clock. Each motion is translated so that it
/// starts where the previous one ended.
Trajectory concatenate(std::span<const MotionSpec> mix, double timestep);

/// Linear-interpolation percentile of the sorted values at rank h = (n - 1) q.
/// Throws InputError for an empty list or q outside [0, 1].
double percentile(std::span<const double> values, double q);

struct ThresholdReport {
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
    double p90 = 0.0;
    double selected = 0.0;
    long long sample_count = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const ThresholdReport&, const ThresholdReport&) = default;
};

inline constexpr double kMinimumMixSeconds = 60.0;

/// Sway, shake and swirl at amplitudes {0.02, 0.05, 0.1} m and frequencies
/// {0.3, 1, 2} Hz, 27 motions sharing total_seconds equally.
std::vector<MotionSpec> default_mix(double total_seconds = 600.0);

double total_duration(std::span<const MotionSpec> mix);

/// Per-step CoG acceleration magnitudes (m/step^2) over the concatenated mix, one per
/// pose. The fluid is spawned with `seed` and settled for one second first.
std::vector<double> acceleration_samples(const vessel::VesselProfile& profile,
                                         fluid::FluidParams params,
                                         std::span<const MotionSpec> mix, std::uint64_t seed);

/// Percentile summary of a set of acceleration samples; selected = p25.
ThresholdReport summarize(std::span<const double> samples, std::uint64_t seed);

/// Runs the fluid over the mix and reports percentiles of the CoG acceleration.
/// Throws ConfigError when the mix is shorter than kMinimumMixSeconds.
ThresholdReport calibrate(const vessel::VesselProfile& profile, const fluid::FluidParams& params,
                          std::span<const MotionSpec> mix, std::uint64_t seed);

std::string report_to_json(const ThresholdReport& report);
ThresholdReport report_from_json(std::string_view text);

}  // namespace vibreau::calibration
