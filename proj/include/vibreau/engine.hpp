#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vibreau/fluid.hpp"
#include "vibreau/vessel.hpp"

namespace vibreau::engine {

enum class Cause { proximity, vertical };

std::string_view to_string(Cause cause);
Cause cause_from_string(std::string_view text);

/// Trigger thresholds and pulse shape. Accelerations are in m/step^2 at the simulation
/// timestep; the vertical band is expressed as fractions of a reference height.
struct TriggerConfig {
    double distance_threshold = 0.01;
    double accel_threshold = 0.0;
    int pulse_duration_ms = 80;
    int pulse_strength = 255;
    double vertical_low_frac = 0.15;
    double vertical_high_frac = 0.35;
    double vertical_window = 1.0;
};

void validate(const TriggerConfig& cfg);

struct PulseCommand {
    double t_start = 0.0;
    int motor = 0;
    int duration_ms = 80;
    int strength = 255;
    Cause cause = Cause::proximity;

    friend bool operator==(const PulseCommand&, const PulseCommand&) = default;
};

enum class VerticalPhase { idle, rose };

struct EngineState {
    /// Most recent CoG samples, oldest first (at most three).
    std::vector<fluid::CoGSample> history;
    /// Per-motor pulse expiry time in seconds; a motor is active while t < expiry.
    std::vector<std::optional<double>> expiry;
    VerticalPhase vertical_phase = VerticalPhase::idle;
    double rose_at = 0.0;
    bool above_high = false;

    explicit EngineState(int motor_count = 0) : expiry(static_cast<std::size_t>(motor_count)) {}

    bool is_active(int motor, double t) const;
};

/// |p2 - 2 p1 + p0| in meters per step^2. Throws InputError unless the three
/// samples are spaced by `timestep` (within 1e-6 s).
double cog_acceleration(std::span<const fluid::CoGSample, 3> history, double timestep);

/// Motors whose anchor lies strictly closer than distance_threshold to `cog`, provided
/// `accel` strictly exceeds accel_threshold. Ascending motor order.
std::vector<int> proximity_triggers(const Vec3& cog, double accel,
                                    const vessel::ActuatorLayout& layout, const TriggerConfig& cfg);

/// Two-phase band detector: returns true on the sample where the CoG height drops
/// below low_frac * reference_height after having crossed above
/// high_frac * reference_height no more than vertical_window seconds earlier.
bool vertical_shake_detect(EngineState& state, const fluid::CoGSample& sample,
                           double reference_height, const TriggerConfig& cfg);

/// Starts a pulse on every listed motor that is not already active at t.
std::vector<PulseCommand> schedule(double t, std::span<const int> motors, Cause cause,
                                   EngineState& state, const TriggerConfig& cfg);

/// Streaming form of the trigger pipeline: feed CoG samples one at a time.
class Engine {
public:
    Engine(vessel::ActuatorLayout layout, TriggerConfig cfg, double reference_height,
           double timestep);

    /// Commands started at this sample, ordered by motor index.
    std::vector<PulseCommand> push(const fluid::CoGSample& sample);

    const vessel::ActuatorLayout& layout() const noexcept { return layout_; }
    const TriggerConfig& config() const noexcept { return cfg_; }
    const EngineState& state() const noexcept { return state_; }

private:
    vessel::ActuatorLayout layout_;
    TriggerConfig cfg_;
    double reference_height_;
    double timestep_;
    EngineState state_;
};

/// Folds the whole trace through Engine; output ordered by t_start, then motor.
std::vector<PulseCommand> run_engine(std::span<const fluid::CoGSample> trace,
                                     const vessel::ActuatorLayout& layout,
                                     const TriggerConfig& cfg, double reference_height,
                                     double timestep = fluid::kDefaultTimestep);

/// One event-log record: {"t_start":0.123457,"motor":3,"duration_ms":80,"strength":255,"cause":"proximity"}
std::string format_event(const PulseCommand& cmd);
PulseCommand parse_event(std::string_view line);

}  // namespace vibreau::engine
