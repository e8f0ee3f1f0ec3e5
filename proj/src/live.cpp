#include "vibreau/live.hpp"

#include <cmath>

#include "vibreau/errors.hpp"

namespace vibreau::live {

using nlohmann::json;

std::vector<std::uint8_t> encode_frame(std::string_view payload) {
    if (payload.size() > kMaxPayload) throw InputError("message exceeds the frame size limit");
    const auto n = static_cast<std::uint32_t>(payload.size());
    std::vector<std::uint8_t> out{static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
                                  static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)};
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

void FrameReader::push(std::span<const std::uint8_t> bytes) {
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<std::string> FrameReader::next() {
    if (buffer_.size() < kHeaderSize) return std::nullopt;
    const std::size_t n = static_cast<std::size_t>(buffer_[0]) << 24 | static_cast<std::size_t>(buffer_[1]) << 16 |
                          static_cast<std::size_t>(buffer_[2]) << 8 | buffer_[3];
    if (n > kMaxPayload) throw FormatError("frame length " + std::to_string(n) + " exceeds limit", consumed_total_);
    if (buffer_.size() < kHeaderSize + n) return std::nullopt;
    std::string payload(buffer_.begin() + kHeaderSize, buffer_.begin() + static_cast<std::ptrdiff_t>(kHeaderSize + n));
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(kHeaderSize + n));
    consumed_total_ += kHeaderSize + n;
    return payload;
}

namespace {

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

std::string pulse_message(const engine::PulseCommand& p) {
    return json{{"type", "pulse"},
                {"t_start", p.t_start},
                {"motor", p.motor},
                {"duration_ms", p.duration_ms},
                {"strength", p.strength},
                {"cause", engine::to_string(p.cause)}}
        .dump();
}

calibration::MotionSpec as_motion(const Preset& p) {
    return {p.kind, p.amplitude, p.frequency, 1.0, 0.0};
}

}  // namespace

LiveSession::LiveSession(harness::SessionConfig cfg, double cog_rate)
    : cfg_(std::move(cfg)), cog_interval_(1.0 / cog_rate) {
    if (!(cog_rate > 0.0)) throw ConfigError("cog rate must be positive");
    harness::validate(cfg_);
    layout_ = harness::make_layout(cfg_);
    rebuild_engine();
    fluid_ = fluid::spawn(cfg_.vessel, cfg_.fluid);
    fluid::settle(fluid_, cfg_.fluid, cfg_.vessel, cfg_.settle_seconds);
    last_cog_ = {0.0, fluid::center_of_gravity(fluid_)};
}

void LiveSession::rebuild_engine() {
    engine_.emplace(layout_, cfg_.trigger, cfg_.reference_height(), cfg_.timestep());
}

std::optional<double> LiveSession::last_pose_time() const {
    if (pending_) return pending_->t;
    if (stepped_) return stepped_->t;
    return std::nullopt;
}

std::string LiveSession::hello() const { return snapshot(); }

std::string LiveSession::error(std::string_view message, std::string_view request) {
    return json{{"type", "error"}, {"message", message}, {"request", request}}.dump();
}

std::string LiveSession::snapshot() const {
    json motors = json::array();
    const double t = last_cog_.t;
    for (int k = 0; k < layout_.motor_count; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        motors.push_back({{"motor", k},
                          {"azimuth", layout_.azimuth(k)},
                          {"position", vec_json(layout_.motor_positions[idx])},
                          {"anchor", vec_json(layout_.anchor_positions[idx])},
                          {"active", engine_->state().is_active(k, t)}});
    }
    json profile = json::array();
    for (const auto& k : cfg_.vessel.knots()) profile.push_back({k.z, k.radius});
    json preset = nullptr;
    if (preset_) {
        preset = {{"kind", calibration::to_string(preset_->kind)},
                  {"amplitude", preset_->amplitude},
                  {"frequency", preset_->frequency}};
    }
    return json{{"type", "snapshot"},
                {"t", t},
                {"steps", steps_},
                {"timestep", cfg_.timestep()},
                {"vessel", {{"name", cfg_.vessel.name()}, {"height", cfg_.vessel.height()}, {"profile", profile}}},
                {"motor_count", layout_.motor_count},
                {"strength", cfg_.trigger.pulse_strength},
                {"pulse_duration_ms", cfg_.trigger.pulse_duration_ms},
                {"motors", motors},
                {"cog", vec_json(last_cog_.cog)},
                {"preset", preset}}
        .dump();
}

std::vector<std::string> LiveSession::on_message(std::string_view text) {
    json msg;
    try {
        msg = json::parse(text);
    } catch (const json::exception&) {
        return {error("message is not valid JSON", "")};
    }
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
        return {error("message has no string 'type'", "")};
    }
    const auto type = msg["type"].get<std::string>();
    try {
        if (type == "pose") {
            if (preset_) return {error("poses are ignored while a preset drives the vessel", type)};
            PoseSample pose;
            pose.t = msg.at("t").get<double>();
            const auto& p = msg.at("position");
            const auto& q = msg.at("orientation");
            if (!p.is_array() || p.size() != 3) return {error("position must be [x,y,z]", type)};
            if (!q.is_array() || q.size() != 4) return {error("orientation must be [w,x,y,z]", type)};
            pose.position = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
            pose.orientation = {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()};
            return on_pose(pose);
        }
        if (type == "config") return on_config(msg);
        if (type == "snapshot") return {snapshot()};
    } catch (const json::exception& e) {
        return {error(std::string("malformed message: ") + e.what(), type)};
    }
    return {error("unknown message type '" + type + "'", type)};
}

std::vector<std::string> LiveSession::on_pose(const PoseSample& pose) {
    if (!std::isfinite(pose.t) || !is_finite(pose.position)) return {error("non-finite pose", "pose")};
    if (std::abs(norm(pose.orientation) - 1.0) > 1e-6) {
        return {error("orientation is not a unit quaternion", "pose")};
    }
    const auto last = last_pose_time();
    if (last && pose.t <= *last) return {error("pose time does not increase", "pose")};

    std::vector<std::string> out;
    const double dt = cfg_.timestep();
    if (last) {
        const double gap = pose.t - *last;
        const long long k = std::llround(gap / dt);
        if (k < 1 || std::abs(gap - static_cast<double>(k) * dt) > 1e-6) {
            return {error("pose time is not on the timestep grid", "pose")};
        }
        // Zero-order hold across gaps longer than one step.
        PoseSample held = pending_ ? *pending_ : *stepped_;
        for (long long i = 1; i < k; ++i) {
            held.t = *last + static_cast<double>(i) * dt;
            accept(held, out);
        }
    }
    accept(pose, out);
    return out;
}

std::vector<std::string> LiveSession::on_config(const json& patch) {
    for (const auto& [key, value] : patch.items()) {
        if (key != "type" && key != "motor_count" && key != "strength" && key != "preset") {
            return {error("unknown config key '" + key + "'", "config")};
        }
    }
    auto next = cfg_;
    std::optional<std::optional<Preset>> next_preset;
    try {
        if (patch.contains("motor_count")) next.actuators.motor_count = patch["motor_count"].get<int>();
        if (patch.contains("strength")) next.trigger.pulse_strength = patch["strength"].get<int>();
        if (patch.contains("preset")) {
            const auto& p = patch["preset"];
            if (p.is_null() || (p.is_string() && p.get<std::string>() == "none")) {
                next_preset.emplace(std::nullopt);
            } else {
                Preset preset;
                preset.kind = calibration::motion_kind_from_string(p.at("kind").get<std::string>());
                preset.amplitude = p.at("amplitude").get<double>();
                preset.frequency = p.at("frequency").get<double>();
                calibration::validate(as_motion(preset));
                next_preset.emplace(preset);
            }
        }
        if (!vessel::is_supported_motor_count(next.actuators.motor_count)) {
            throw ConfigError("motor_count must be 4, 6 or 8");
        }
        harness::validate(next);
    } catch (const std::exception& e) {
        return {error(e.what(), "config")};
    }

    const bool rebuild = next.actuators.motor_count != cfg_.actuators.motor_count ||
                         next.trigger.pulse_strength != cfg_.trigger.pulse_strength;
    cfg_ = std::move(next);
    if (rebuild) {
        layout_ = harness::make_layout(cfg_);
        rebuild_engine();
    }
    if (next_preset) {
        preset_ = *next_preset;
        if (preset_) {
            const auto last = pending_ ? pending_ : stepped_;
            preset_t0_ = last ? last->t : 0.0;
            const Vec3 origin = last ? last->position : Vec3{};
            preset_offset_ = origin - calibration::motion_pose(as_motion(*preset_), 0.0).position;
        }
    }
    return {snapshot()};
}

PoseSample LiveSession::preset_pose(double t) const {
    PoseSample pose = calibration::motion_pose(as_motion(*preset_), t - preset_t0_);
    pose.t = t;
    pose.position = pose.position + preset_offset_;
    return pose;
}

std::vector<std::string> LiveSession::on_idle_tick() {
    std::vector<std::string> out;
    const auto last = pending_ ? pending_ : stepped_;
    const double dt = cfg_.timestep();
    if (preset_) {
        accept(preset_pose(last ? last->t + dt : preset_t0_), out);
    } else if (last) {
        PoseSample held = *last;
        held.t += dt;
        accept(held, out);
    }
    return out;
}

void LiveSession::accept(const PoseSample& pose, std::vector<std::string>& out) {
    if (pending_) {
        step(*pending_, pose, out);
        stepped_ = pending_;
    }
    pending_ = pose;
}

void LiveSession::step(const PoseSample& curr, const PoseSample& next, std::vector<std::string>& out) {
    const PoseSample& prev = stepped_ ? *stepped_ : curr;
    const auto drive = fluid::world_to_local_drive(prev, curr, next, cfg_.timestep(), cfg_.fluid.gravity);
    fluid_ = fluid::step(fluid_, cfg_.fluid, cfg_.vessel, drive);
    ++steps_;
    last_cog_ = {curr.t, fluid::center_of_gravity(fluid_)};
    for (const auto& p : engine_->push(last_cog_)) out.push_back(pulse_message(p));
    if (!last_cog_emit_ || last_cog_.t - *last_cog_emit_ >= cog_interval_ - 1e-9) {
        last_cog_emit_ = last_cog_.t;
        out.push_back(json{{"type", "cog"}, {"t", last_cog_.t}, {"cog", vec_json(last_cog_.cog)}}.dump());
    }
}

}  // namespace vibreau::live
