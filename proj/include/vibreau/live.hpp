#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vibreau/calibration.hpp"
#include "vibreau/engine.hpp"
#include "vibreau/fluid.hpp"
#include "vibreau/harness.hpp"

namespace vibreau::live {

// Stream framing: 4-byte big-endian payload length, then a UTF-8 JSON document.
inline constexpr std::size_t kHeaderSize = 4;
inline constexpr std::size_t kMaxPayload = 1 << 20;

std::vector<std::uint8_t> encode_frame(std::string_view payload);

/// Incremental decoder for the framing above.
class FrameReader {
public:
    /// Appends bytes; throws FormatError (offset = stream byte position) when a header
    /// announces more than kMaxPayload bytes.
    void push(std::span<const std::uint8_t> bytes);
    std::optional<std::string> next();

private:
    std::vector<std::uint8_t> buffer_;
    std::size_t consumed_total_ = 0;
};

/// Preset motion the server generates itself while no client poses are expected.
struct Preset {
    calibration::MotionKind kind = calibration::MotionKind::sway;
    double amplitude = 0.0;
    double frequency = 0.0;
};

inline constexpr double kDefaultCogRate = 30.0;

/// One interactive session, driven by inbound messages and idle ticks.
///
/// A pose is stepped once the following pose is known (the drive uses a central
/// difference); an idle tick appends a copy of the last pose one timestep later, so
/// silence holds the vessel still. Fed the same pose stream, the session produces the
/// same pulses as harness::simulate. Outputs are JSON message strings.
class LiveSession {
public:
    explicit LiveSession(harness::SessionConfig cfg, double cog_rate = kDefaultCogRate);

    /// Greeting sent when a client connects: a snapshot.
    std::string hello() const;

    std::vector<std::string> on_message(std::string_view text);

    /// Advances one timestep with the held pose, or the preset pose if one is active.
    /// Does nothing before the first pose when no preset is set.
    std::vector<std::string> on_idle_tick();

    std::string snapshot() const;

    const harness::SessionConfig& config() const noexcept { return cfg_; }
    const std::optional<Preset>& preset() const noexcept { return preset_; }
    long long steps() const noexcept { return steps_; }
    /// Time of the newest accepted pose, if any.
    std::optional<double> last_pose_time() const;

private:
    std::vector<std::string> on_pose(const PoseSample& pose);
    std::vector<std::string> on_config(const nlohmann::json& patch);
    void accept(const PoseSample& pose, std::vector<std::string>& out);
    void step(const PoseSample& curr, const PoseSample& next, std::vector<std::string>& out);
    void rebuild_engine();
    PoseSample preset_pose(double t) const;
    static std::string error(std::string_view message, std::string_view request);

    harness::SessionConfig cfg_;
    double cog_interval_;
    vessel::ActuatorLayout layout_;
    std::optional<engine::Engine> engine_;
    fluid::FluidState fluid_;
    std::optional<PoseSample> stepped_;
    std::optional<PoseSample> pending_;
    std::optional<double> last_cog_emit_;
    fluid::CoGSample last_cog_;
    std::optional<Preset> preset_;
    double preset_t0_ = 0.0;
    Vec3 preset_offset_;
    long long steps_ = 0;
};

}  // namespace vibreau::live
