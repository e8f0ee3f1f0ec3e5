#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vibreau/engine.hpp"

namespace vibreau::device {

// Wire frame: AA motor strength dur_lo dur_hi checksum (XOR of the four payload bytes).
inline constexpr std::uint8_t kSync = 0xAA;
inline constexpr std::size_t kFrameSize = 6;
inline constexpr int kMaxMotor = 7;
inline constexpr int kMotorSlots = kMaxMotor + 1;

using Frame = std::array<std::uint8_t, kFrameSize>;

class EncodeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct DeviceCommand {
    int motor = 0;
    int strength = 0;
    int duration_ms = 0;

    friend bool operator==(const DeviceCommand&, const DeviceCommand&) = default;
};

std::uint8_t checksum(std::uint8_t motor, std::uint8_t strength, std::uint8_t lo, std::uint8_t hi);

Frame encode(const DeviceCommand& cmd);
Frame encode(const engine::PulseCommand& cmd);

enum class DecodeStatus { ok, incomplete, checksum_error, range_error };

std::string_view to_string(DecodeStatus status);

struct DecodeResult {
    DecodeStatus status = DecodeStatus::incomplete;
    DeviceCommand command;
    std::size_t skipped = 0;   // bytes discarded before the sync byte
    std::size_t consumed = 0;  // bytes the caller should drop from the front
};

/// Decodes the first frame in `bytes`, scanning forward to the next sync byte.
/// On a checksum error only the sync byte is consumed so the scan can resume inside
/// the rejected frame; on a range error the whole (well-formed) frame is consumed.
DecodeResult decode(std::span<const std::uint8_t> bytes);

/// Coin motor electrical parameters.
struct MotorModel {
    double resistance = 15.2;
    double rated_voltage = 5.0;
    double rated_frequency = 200.0;
    double rated_current = 0.085;
    double max_amplitude_g = 1.2;
};

struct PowerDraw {
    double effective_voltage = 0.0;
    double average_power = 0.0;
};

/// duty = strength/255; effective voltage duty*V; average power duty*V^2/R.
PowerDraw power_draw(int strength, const MotorModel& model = {});

struct MotorState {
    bool active = false;
    int strength = 0;
    double expires_at_ms = 0.0;
};

struct Fault {
    double at_ms = 0.0;
    DecodeStatus kind = DecodeStatus::checksum_error;
    std::string detail;
};

struct Activation {
    double at_ms = 0.0;
    DeviceCommand command;
};

struct EmulatorState {
    std::array<MotorState, kMotorSlots> motors{};
    double clock_ms = 0.0;
    double energy_j = 0.0;
    std::vector<Fault> fault_log;
    std::vector<Activation> activations;

    /// Sum of the average power of every active motor.
    double instantaneous_power(const MotorModel& model = {}) const;
};

/// Firmware emulator. Every valid frame (re)starts its motor, so a retrigger while
/// active extends the expiry; the host engine is the side that suppresses retriggers.
class Emulator {
public:
    explicit Emulator(MotorModel model = {});

    /// Advances the clock to `now_ms`, then decodes whatever complete frames the
    /// buffered bytes contain. Partial frames stay buffered for the next feed.
    const EmulatorState& feed(std::span<const std::uint8_t> bytes, double now_ms);

    /// Moves the clock forward, integrating energy and expiring finished pulses.
    const EmulatorState& advance(double now_ms);

    const EmulatorState& state() const noexcept { return state_; }
    const MotorModel& model() const noexcept { return model_; }
    std::size_t buffered() const noexcept { return pending_.size(); }

    /// One-line JSON record: clock, energy and per-motor state.
    std::string state_dump() const;

private:
    MotorModel model_;
    EmulatorState state_;
    std::vector<std::uint8_t> pending_;
};

}  // namespace vibreau::device
