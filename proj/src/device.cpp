#include "vibreau/device.hpp"

#include <algorithm>
#include <string>

#include <json.hpp>

namespace vibreau::device {

std::uint8_t checksum(std::uint8_t motor, std::uint8_t strength, std::uint8_t lo, std::uint8_t hi) {
    return static_cast<std::uint8_t>(motor ^ strength ^ lo ^ hi);
}

Frame encode(const DeviceCommand& cmd) {
    if (cmd.motor < 0 || cmd.motor > kMaxMotor) {
        throw EncodeError("motor " + std::to_string(cmd.motor) + " outside 0-7");
    }
    if (cmd.strength < 0 || cmd.strength > 255) {
        throw EncodeError("strength " + std::to_string(cmd.strength) + " outside 0-255");
    }
    if (cmd.duration_ms < 0 || cmd.duration_ms > 65535) {
        throw EncodeError("duration " + std::to_string(cmd.duration_ms) + " ms outside 0-65535");
    }
    const auto motor = static_cast<std::uint8_t>(cmd.motor);
    const auto strength = static_cast<std::uint8_t>(cmd.strength);
    const auto lo = static_cast<std::uint8_t>(cmd.duration_ms & 0xFF);
    const auto hi = static_cast<std::uint8_t>(cmd.duration_ms >> 8);
    return {kSync, motor, strength, lo, hi, checksum(motor, strength, lo, hi)};
}

Frame encode(const engine::PulseCommand& cmd) {
    return encode(DeviceCommand{cmd.motor, cmd.strength, cmd.duration_ms});
}

std::string_view to_string(DecodeStatus status) {
    switch (status) {
        case DecodeStatus::ok: return "ok";
        case DecodeStatus::incomplete: return "incomplete";
        case DecodeStatus::checksum_error: return "checksum_error";
        case DecodeStatus::range_error: return "range_error";
    }
    return "unknown";
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
    DecodeResult r;
    const auto sync = std::find(bytes.begin(), bytes.end(), kSync);
    r.skipped = static_cast<std::size_t>(sync - bytes.begin());
    r.consumed = r.skipped;
    if (bytes.size() - r.skipped < kFrameSize) return r;

    const auto f = bytes.subspan(r.skipped, kFrameSize);
    if (checksum(f[1], f[2], f[3], f[4]) != f[5]) {
        r.status = DecodeStatus::checksum_error;
        r.consumed = r.skipped + 1;
        return r;
    }
    r.command = {f[1], f[2], f[3] | f[4] << 8};
    r.consumed = r.skipped + kFrameSize;
    r.status = f[1] > kMaxMotor ? DecodeStatus::range_error : DecodeStatus::ok;
    return r;
}

PowerDraw power_draw(int strength, const MotorModel& model) {
    if (strength < 0 || strength > 255) {
        throw std::invalid_argument("strength " + std::to_string(strength) + " outside 0-255");
    }
    const double duty = strength / 255.0;
    return {duty * model.rated_voltage,
            duty * model.rated_voltage * model.rated_voltage / model.resistance};
}

double EmulatorState::instantaneous_power(const MotorModel& model) const {
    double total = 0.0;
    for (const auto& m : motors) {
        if (m.active) total += power_draw(m.strength, model).average_power;
    }
    return total;
}

Emulator::Emulator(MotorModel model) : model_(model) {}

const EmulatorState& Emulator::advance(double now_ms) {
    if (now_ms < state_.clock_ms) now_ms = state_.clock_ms;
    for (auto& m : state_.motors) {
        if (!m.active) continue;
        const double until = std::min(m.expires_at_ms, now_ms);
        state_.energy_j += power_draw(m.strength, model_).average_power * (until - state_.clock_ms) / 1000.0;
        if (m.expires_at_ms <= now_ms) m = MotorState{};
    }
    state_.clock_ms = now_ms;
    return state_;
}

const EmulatorState& Emulator::feed(std::span<const std::uint8_t> bytes, double now_ms) {
    advance(now_ms);
    pending_.insert(pending_.end(), bytes.begin(), bytes.end());
    std::size_t pos = 0;
    for (;;) {
        const auto r = decode(std::span(pending_).subspan(pos));
        if (r.status == DecodeStatus::incomplete) {
            // Keep a possible partial frame; drop the garbage before it.
            pos += r.skipped;
            break;
        }
        pos += r.consumed;
        if (r.status == DecodeStatus::checksum_error) {
            state_.fault_log.push_back({state_.clock_ms, r.status, "checksum mismatch"});
            continue;
        }
        if (r.status == DecodeStatus::range_error) {
            state_.fault_log.push_back(
                {state_.clock_ms, r.status, "motor " + std::to_string(r.command.motor) + " out of range"});
            continue;
        }
        state_.activations.push_back({state_.clock_ms, r.command});
        auto& m = state_.motors[static_cast<std::size_t>(r.command.motor)];
        if (r.command.duration_ms == 0) {
            m = MotorState{};
        } else {
            m = {true, r.command.strength, state_.clock_ms + r.command.duration_ms};
        }
    }
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(pos));
    return state_;
}

std::string Emulator::state_dump() const {
    nlohmann::json motors = nlohmann::json::array();
    for (std::size_t i = 0; i < state_.motors.size(); ++i) {
        const auto& m = state_.motors[i];
        motors.push_back({{"motor", i},
                          {"active", m.active},
                          {"strength", m.strength},
                          {"expires_at_ms", m.expires_at_ms}});
    }
    nlohmann::json doc = {{"type", "state"},
                          {"clock_ms", state_.clock_ms},
                          {"energy_j", state_.energy_j},
                          {"power_w", state_.instantaneous_power(model_)},
                          {"faults", state_.fault_log.size()},
                          {"activations", state_.activations.size()},
                          {"motors", motors}};
    return doc.dump();
}

}  // namespace vibreau::device
