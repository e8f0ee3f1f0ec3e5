#include "vibreau/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "vibreau/errors.hpp"

namespace vibreau::engine {

namespace {

// Pulse expiry comparisons tolerate accumulated rounding in sample times.
constexpr double kTimeSlack = 1e-9;

}  // namespace

std::string_view to_string(Cause cause) {
    return cause == Cause::proximity ? "proximity" : "vertical";
}

Cause cause_from_string(std::string_view text) {
    if (text == "proximity") return Cause::proximity;
    if (text == "vertical") return Cause::vertical;
    throw InputError("unknown pulse cause '" + std::string(text) + "'");
}

void validate(const TriggerConfig& cfg) {
    if (!(cfg.distance_threshold > 0.0)) throw ConfigError("distance_threshold must be positive");
    if (!(cfg.accel_threshold >= 0.0)) throw ConfigError("accel_threshold must be >= 0");
    if (cfg.pulse_duration_ms < 0 || cfg.pulse_duration_ms > 65535) {
        throw ConfigError("pulse_duration_ms must fit in 16 bits");
    }
    if (cfg.pulse_strength < 0 || cfg.pulse_strength > 255) {
        throw ConfigError("pulse_strength must lie in [0, 255]");
    }
    if (!(cfg.vertical_low_frac >= 0.0 && cfg.vertical_low_frac < cfg.vertical_high_frac &&
          cfg.vertical_high_frac <= 1.0)) {
        throw ConfigError("vertical band must satisfy 0 <= low < high <= 1");
    }
    if (!(cfg.vertical_window > 0.0)) throw ConfigError("vertical_window must be positive");
}

bool EngineState::is_active(int motor, double t) const {
    const auto& e = expiry.at(static_cast<std::size_t>(motor));
    return e && t < *e - kTimeSlack;
}

double cog_acceleration(std::span<const fluid::CoGSample, 3> history, double timestep) {
    const double d1 = history[1].t - history[0].t;
    const double d2 = history[2].t - history[1].t;
    if (std::abs(d1 - timestep) > 1e-6 || std::abs(d2 - timestep) > 1e-6) {
        throw InputError("CoG samples are not spaced by the simulation timestep");
    }
    return norm(history[2].cog - 2.0 * history[1].cog + history[0].cog);
}

std::vector<int> proximity_triggers(const Vec3& cog, double accel,
                                    const vessel::ActuatorLayout& layout,
                                    const TriggerConfig& cfg) {
    std::vector<int> motors;
    if (!(accel > cfg.accel_threshold)) return motors;
    for (int k = 0; k < layout.motor_count; ++k) {
        if (distance(cog, layout.anchor_positions[static_cast<std::size_t>(k)]) <
            cfg.distance_threshold) {
            motors.push_back(k);
        }
    }
    return motors;
}

bool vertical_shake_detect(EngineState& state, const fluid::CoGSample& sample,
                           double reference_height, const TriggerConfig& cfg) {
    if (!(reference_height > 0.0)) throw InputError("reference height must be positive");
    const double low = cfg.vertical_low_frac * reference_height;
    const double high = cfg.vertical_high_frac * reference_height;
    const double z = sample.cog.z;

    if (state.vertical_phase == VerticalPhase::rose &&
        sample.t - state.rose_at > cfg.vertical_window + kTimeSlack) {
        state.vertical_phase = VerticalPhase::idle;
    }
    if (state.vertical_phase == VerticalPhase::rose && z < low) {
        state.vertical_phase = VerticalPhase::idle;
        state.above_high = false;
        return true;
    }
    if (z > high) {
        // Only a fresh upward crossing arms the detector.
        if (!state.above_high && state.vertical_phase == VerticalPhase::idle) {
            state.vertical_phase = VerticalPhase::rose;
            state.rose_at = sample.t;
        }
        state.above_high = true;
    } else {
        state.above_high = false;
    }
    return false;
}

std::vector<PulseCommand> schedule(double t, std::span<const int> motors, Cause cause,
                                   EngineState& state, const TriggerConfig& cfg) {
    std::vector<PulseCommand> out;
    for (int motor : motors) {
        if (state.is_active(motor, t)) continue;
        state.expiry.at(static_cast<std::size_t>(motor)) = t + cfg.pulse_duration_ms / 1000.0;
        out.push_back({t, motor, cfg.pulse_duration_ms, cfg.pulse_strength, cause});
    }
    return out;
}

Engine::Engine(vessel::ActuatorLayout layout, TriggerConfig cfg, double reference_height,
               double timestep)
    : layout_(std::move(layout)),
      cfg_(cfg),
      reference_height_(reference_height),
      timestep_(timestep),
      state_(layout_.motor_count) {
    validate(cfg_);
    if (static_cast<int>(layout_.anchor_positions.size()) != layout_.motor_count ||
        static_cast<int>(layout_.motor_positions.size()) != layout_.motor_count) {
        throw ConfigError("layout must pair exactly one anchor with each motor");
    }
    if (!(reference_height_ > 0.0)) throw ConfigError("reference height must be positive");
}

std::vector<PulseCommand> Engine::push(const fluid::CoGSample& sample) {
    for (auto& e : state_.expiry) {
        if (e && sample.t >= *e - kTimeSlack) e.reset();
    }
    if (!state_.history.empty() && !(sample.t > state_.history.back().t)) {
        throw InputError("CoG samples must be strictly increasing in time");
    }
    state_.history.push_back(sample);
    if (state_.history.size() > 3) state_.history.erase(state_.history.begin());

    std::vector<PulseCommand> out;
    if (vertical_shake_detect(state_, sample, reference_height_, cfg_)) {
        std::vector<int> all(static_cast<std::size_t>(layout_.motor_count));
        for (int k = 0; k < layout_.motor_count; ++k) all[static_cast<std::size_t>(k)] = k;
        out = schedule(sample.t, all, Cause::vertical, state_, cfg_);
    }
    if (state_.history.size() == 3) {
        const double accel =
            cog_acceleration(std::span<const fluid::CoGSample, 3>(state_.history.data(), 3), timestep_);
        const auto motors = proximity_triggers(sample.cog, accel, layout_, cfg_);
        auto more = schedule(sample.t, motors, Cause::proximity, state_, cfg_);
        out.insert(out.end(), more.begin(), more.end());
    }
    std::sort(out.begin(), out.end(),
              [](const PulseCommand& a, const PulseCommand& b) { return a.motor < b.motor; });
    return out;
}

std::vector<PulseCommand> run_engine(std::span<const fluid::CoGSample> trace,
                                     const vessel::ActuatorLayout& layout,
                                     const TriggerConfig& cfg, double reference_height,
                                     double timestep) {
    Engine engine(layout, cfg, reference_height, timestep);
    std::vector<PulseCommand> out;
    for (const auto& sample : trace) {
        auto cmds = engine.push(sample);
        out.insert(out.end(), cmds.begin(), cmds.end());
    }
    return out;
}

std::string format_event(const PulseCommand& cmd) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  R"({"t_start":%.6f,"motor":%d,"duration_ms":%d,"strength":%d,"cause":"%s"})",
                  cmd.t_start, cmd.motor, cmd.duration_ms, cmd.strength,
                  cmd.cause == Cause::proximity ? "proximity" : "vertical");
    return buf;
}

PulseCommand parse_event(std::string_view line) {
    try {
        const auto doc = nlohmann::json::parse(line);
        return {doc.at("t_start").get<double>(), doc.at("motor").get<int>(),
                doc.at("duration_ms").get<int>(), doc.at("strength").get<int>(),
                cause_from_string(doc.at("cause").get<std::string>())};
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("event record: ") + e.what());
    }
}

}  // namespace vibreau::engine
