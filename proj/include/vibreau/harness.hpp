#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vibreau/acoustics.hpp"
#include "vibreau/calibration.hpp"
#include "vibreau/device.hpp"
#include "vibreau/engine.hpp"
#include "vibreau/fluid.hpp"
#include "vibreau/pose.hpp"
#include "vibreau/vessel.hpp"

namespace vibreau::harness {

struct ActuatorConfig {
    int motor_count = 8;
    double ring_height = vessel::kDefaultRingHeight;
    double anchor_height = vessel::kDefaultAnchorHeight;
    double anchor_radius_fraction = 0.7;
    vessel::Mounting mounting = vessel::Mounting::inside;
};

/// Everything a run depends on. Defaults: beaker, 8 inside motors at strength 255.
struct SessionConfig {
    vessel::VesselProfile vessel = vessel::beaker();
    fluid::FluidParams fluid;
    ActuatorConfig actuators;
    engine::TriggerConfig trigger;
    double settle_seconds = 1.0;

    std::uint64_t seed() const noexcept { return fluid.seed; }
    double timestep() const noexcept { return fluid.timestep; }
    /// Height the vertical band fractions refer to.
    double reference_height() const noexcept { return vessel.height(); }
};

/// Validates every part and checks the layout can be built. Throws ConfigError.
void validate(const SessionConfig& cfg);

vessel::ActuatorLayout make_layout(const SessionConfig& cfg);

/// Parses a JSON config document. Missing keys keep their defaults; unknown keys are
/// rejected. "vessel" is a built-in name or an inline profile object.
SessionConfig config_from_json(std::string_view text);
std::string config_to_json(const SessionConfig& cfg);
SessionConfig load_config(const std::filesystem::path& path);

// Line-delimited records. Blank lines are ignored; errors carry the 1-based line.
//   pose:  {"t":0.0,"position":[x,y,z],"orientation":[w,x,y,z]}
//   cog:   {"t":0.0,"cog":[x,y,z]}
//   event: {"t_start":0.0,"motor":0,"duration_ms":80,"strength":255,"cause":"proximity"}
std::string format_pose(const PoseSample& pose);
PoseSample parse_pose(std::string_view line);
std::string format_cog(const fluid::CoGSample& sample);

/// Reads a trajectory and checks it is strictly increasing at `timestep` (1e-6 s)
/// with unit quaternions. Throws FormatError with the offending line number.
Trajectory read_trajectory(std::istream& in, double timestep);
Trajectory load_trajectory(const std::filesystem::path& path, double timestep);
void write_trajectory(std::ostream& out, const Trajectory& trajectory);

std::vector<engine::PulseCommand> read_events(std::istream& in);
void write_events(std::ostream& out, const std::vector<engine::PulseCommand>& events);
void write_cog(std::ostream& out, const std::vector<fluid::CoGSample>& trace);

struct SimulationSummary {
    long long steps = 0;
    long long events = 0;
    std::map<std::string, long long> by_cause;
    std::vector<long long> by_motor;

    std::string to_json() const;
};

struct SimulationResult {
    std::vector<fluid::CoGSample> cog;
    std::vector<engine::PulseCommand> events;
    SimulationSummary summary;
};

/// Spawns and settles the fluid, steps it once per pose and runs the engine.
SimulationResult simulate(const SessionConfig& cfg, const Trajectory& trajectory);

/// File form of simulate: writes the event log and optionally the CoG trace.
SimulationSummary run_simulate(const SessionConfig& cfg, const std::filesystem::path& trajectory_in,
                               const std::filesystem::path& events_out,
                               const std::optional<std::filesystem::path>& cog_out = std::nullopt);

/// Calibrates over `mix` (the default 600 s mix when absent) and writes the report.
calibration::ThresholdReport run_calibrate(const SessionConfig& cfg,
                                           const std::optional<std::vector<calibration::MotionSpec>>& mix,
                                           const std::filesystem::path& report_out);

/// Motion list document: [{"kind":"sway","amplitude":0.1,"frequency":2,"duration":10}, ...]
std::vector<calibration::MotionSpec> mix_from_json(std::string_view text);

struct FileAnalysis {
    std::string file;
    std::optional<acoustics::ImpactMeasurement> impact;
    std::optional<acoustics::AsymmetryResult> asymmetry;
    std::string error;
};

struct AnalysisReport {
    std::vector<FileAnalysis> files;
    std::optional<double> mean_duration_ms;
    int channel = 0;

    std::string to_json() const;
};

struct AnalyzeOptions {
    int channel = 0;
    double noise_floor = acoustics::kDefaultNoiseFloor;
    double asymmetry_threshold = acoustics::kDefaultAsymmetryThreshold;
};

/// Measures every file; unreadable or malformed files are reported and skipped.
/// Throws InputError for an empty path list.
AnalysisReport analyze(const std::vector<std::filesystem::path>& wav_paths, const AnalyzeOptions& options = {});
AnalysisReport run_analyze(const std::vector<std::filesystem::path>& wav_paths,
                           const std::filesystem::path& report_out, const AnalyzeOptions& options = {});

/// Feeds the encoded event log through a device emulator, clocked by each t_start.
device::EmulatorState replay_to_emulator(const std::vector<engine::PulseCommand>& events);

}  // namespace vibreau::harness
