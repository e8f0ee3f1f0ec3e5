#include "vibreau/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vibreau/errors.hpp"

namespace vibreau::harness {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown key '" + key + "' in " + std::string(where));
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw InputError("expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

bool blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    return out;
}

vessel::Mounting mounting_from_string(const std::string& text) {
    if (text == "inside") return vessel::Mounting::inside;
    if (text == "outside") return vessel::Mounting::outside;
    throw ConfigError("unknown mounting '" + text + "'");
}

}  // namespace

void validate(const SessionConfig& cfg) {
    fluid::validate(cfg.fluid);
    engine::validate(cfg.trigger);
    if (!(cfg.settle_seconds >= 0.0)) throw ConfigError("settle_seconds must be >= 0");
    make_layout(cfg);
}

vessel::ActuatorLayout make_layout(const SessionConfig& cfg) {
    const auto& a = cfg.actuators;
    return vessel::layout_actuators(cfg.vessel, a.motor_count, a.ring_height, a.anchor_height,
                                    a.anchor_radius_fraction, a.mounting);
}

SessionConfig config_from_json(std::string_view text) {
    SessionConfig cfg;
    try {
        const auto doc = json::parse(text);
        check_keys(doc, {"vessel", "seed", "timestep", "settle_seconds", "fluid", "actuators", "trigger"},
                   "config");
        if (auto it = doc.find("vessel"); it != doc.end()) {
            cfg.vessel = it->is_string() ? vessel::builtin_profile(it->get<std::string>())
                                         : vessel::profile_from_json(it->dump());
        }
        if (auto it = doc.find("fluid"); it != doc.end()) {
            check_keys(*it,
                       {"particle_count", "particle_mass", "rest_spacing", "smoothing_radius",
                        "viscosity_coeff", "constraint_iterations", "wall_friction", "sleep_threshold",
                        "timestep", "gravity", "seed"},
                       "fluid");
            auto& f = cfg.fluid;
            read(*it, "particle_count", f.particle_count);
            read(*it, "particle_mass", f.particle_mass);
            read(*it, "rest_spacing", f.rest_spacing);
            read(*it, "smoothing_radius", f.smoothing_radius);
            read(*it, "viscosity_coeff", f.viscosity_coeff);
            read(*it, "constraint_iterations", f.constraint_iterations);
            read(*it, "wall_friction", f.wall_friction);
            read(*it, "sleep_threshold", f.sleep_threshold);
            read(*it, "timestep", f.timestep);
            read(*it, "gravity", f.gravity);
            read(*it, "seed", f.seed);
        }
        read(doc, "seed", cfg.fluid.seed);
        read(doc, "timestep", cfg.fluid.timestep);
        read(doc, "settle_seconds", cfg.settle_seconds);
        if (auto it = doc.find("actuators"); it != doc.end()) {
            check_keys(*it, {"motor_count", "ring_height", "anchor_height", "anchor_radius_fraction", "mounting"},
                       "actuators");
            auto& a = cfg.actuators;
            read(*it, "motor_count", a.motor_count);
            read(*it, "ring_height", a.ring_height);
            read(*it, "anchor_height", a.anchor_height);
            read(*it, "anchor_radius_fraction", a.anchor_radius_fraction);
            if (auto m = it->find("mounting"); m != it->end()) a.mounting = mounting_from_string(m->get<std::string>());
        }
        if (auto it = doc.find("trigger"); it != doc.end()) {
            check_keys(*it,
                       {"distance_threshold", "accel_threshold", "pulse_duration_ms", "pulse_strength",
                        "vertical_low_frac", "vertical_high_frac", "vertical_window"},
                       "trigger");
            auto& t = cfg.trigger;
            read(*it, "distance_threshold", t.distance_threshold);
            read(*it, "accel_threshold", t.accel_threshold);
            read(*it, "pulse_duration_ms", t.pulse_duration_ms);
            read(*it, "pulse_strength", t.pulse_strength);
            read(*it, "vertical_low_frac", t.vertical_low_frac);
            read(*it, "vertical_high_frac", t.vertical_high_frac);
            read(*it, "vertical_window", t.vertical_window);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

std::string config_to_json(const SessionConfig& cfg) {
    const auto& f = cfg.fluid;
    const auto& a = cfg.actuators;
    const auto& t = cfg.trigger;
    const json doc{
        {"vessel", json::parse(vessel::profile_to_json(cfg.vessel))},
        {"seed", f.seed},
        {"timestep", f.timestep},
        {"settle_seconds", cfg.settle_seconds},
        {"fluid",
         {{"particle_count", f.particle_count},
          {"particle_mass", f.particle_mass},
          {"rest_spacing", f.rest_spacing},
          {"smoothing_radius", f.smoothing_radius},
          {"viscosity_coeff", f.viscosity_coeff},
          {"constraint_iterations", f.constraint_iterations},
          {"wall_friction", f.wall_friction},
          {"sleep_threshold", f.sleep_threshold},
          {"gravity", f.gravity}}},
        {"actuators",
         {{"motor_count", a.motor_count},
          {"ring_height", a.ring_height},
          {"anchor_height", a.anchor_height},
          {"anchor_radius_fraction", a.anchor_radius_fraction},
          {"mounting", a.mounting == vessel::Mounting::inside ? "inside" : "outside"}}},
        {"trigger",
         {{"distance_threshold", t.distance_threshold},
          {"accel_threshold", t.accel_threshold},
          {"pulse_duration_ms", t.pulse_duration_ms},
          {"pulse_strength", t.pulse_strength},
          {"vertical_low_frac", t.vertical_low_frac},
          {"vertical_high_frac", t.vertical_high_frac},
          {"vertical_window", t.vertical_window}}}};
    return doc.dump(2);
}

SessionConfig load_config(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

std::string format_pose(const PoseSample& pose) {
    const auto& q = pose.orientation;
    return json{{"t", pose.t},
                {"position", vec_json(pose.position)},
                {"orientation", json::array({q.w, q.x, q.y, q.z})}}
        .dump();
}

PoseSample parse_pose(std::string_view line) {
    try {
        const auto doc = json::parse(line);
        PoseSample p;
        p.t = doc.at("t").get<double>();
        p.position = vec_from(doc.at("position"));
        const auto& q = doc.at("orientation");
        if (!q.is_array() || q.size() != 4) throw InputError("orientation must be [w,x,y,z]");
        p.orientation = {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()};
        return p;
    } catch (const json::exception& e) {
        throw InputError(std::string("pose record: ") + e.what());
    }
}

std::string format_cog(const fluid::CoGSample& sample) {
    return json{{"t", sample.t}, {"cog", vec_json(sample.cog)}}.dump();
}

Trajectory read_trajectory(std::istream& in, double timestep) {
    Trajectory out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        PoseSample p;
        try {
            p = parse_pose(line);
        } catch (const InputError& e) {
            throw FormatError(e.what(), line_no);
        }
        if (!std::isfinite(p.t) || !is_finite(p.position)) throw FormatError("non-finite pose", line_no);
        if (std::abs(norm(p.orientation) - 1.0) > 1e-6) {
            throw FormatError("orientation is not a unit quaternion", line_no);
        }
        if (!out.empty()) {
            const double dt = p.t - out.back().t;
            if (dt <= 0.0) throw FormatError("pose time does not increase", line_no);
            if (std::abs(dt - timestep) > 1e-6) throw FormatError("pose spacing differs from the timestep", line_no);
        }
        out.push_back(p);
    }
    return out;
}

Trajectory load_trajectory(const std::filesystem::path& path, double timestep) {
    auto in = open_in(path);
    return read_trajectory(in, timestep);
}

void write_trajectory(std::ostream& out, const Trajectory& trajectory) {
    for (const auto& p : trajectory) out << format_pose(p) << '\n';
}

std::vector<engine::PulseCommand> read_events(std::istream& in) {
    std::vector<engine::PulseCommand> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        try {
            out.push_back(engine::parse_event(line));
        } catch (const InputError& e) {
            throw FormatError(e.what(), line_no);
        }
    }
    return out;
}

void write_events(std::ostream& out, const std::vector<engine::PulseCommand>& events) {
    for (const auto& e : events) out << engine::format_event(e) << '\n';
}

void write_cog(std::ostream& out, const std::vector<fluid::CoGSample>& trace) {
    for (const auto& s : trace) out << format_cog(s) << '\n';
}

std::string SimulationSummary::to_json() const {
    return json{{"steps", steps}, {"events", events}, {"by_cause", by_cause}, {"by_motor", by_motor}}.dump();
}

SimulationResult simulate(const SessionConfig& cfg, const Trajectory& trajectory) {
    validate(cfg);
    const auto layout = make_layout(cfg);
    auto state = fluid::spawn(cfg.vessel, cfg.fluid);
    fluid::settle(state, cfg.fluid, cfg.vessel, cfg.settle_seconds);

    SimulationResult r;
    r.cog = fluid::run_trajectory(state, cfg.fluid, cfg.vessel, trajectory);
    r.events = engine::run_engine(r.cog, layout, cfg.trigger, cfg.reference_height(), cfg.timestep());

    r.summary.steps = static_cast<long long>(r.cog.size());
    r.summary.events = static_cast<long long>(r.events.size());
    r.summary.by_cause = {{"proximity", 0}, {"vertical", 0}};
    r.summary.by_motor.assign(static_cast<std::size_t>(layout.motor_count), 0);
    for (const auto& e : r.events) {
        ++r.summary.by_cause[std::string(engine::to_string(e.cause))];
        ++r.summary.by_motor[static_cast<std::size_t>(e.motor)];
    }
    return r;
}

SimulationSummary run_simulate(const SessionConfig& cfg, const std::filesystem::path& trajectory_in,
                               const std::filesystem::path& events_out,
                               const std::optional<std::filesystem::path>& cog_out) {
    const auto trajectory = load_trajectory(trajectory_in, cfg.timestep());
    const auto result = simulate(cfg, trajectory);
    auto events = open_out(events_out);
    write_events(events, result.events);
    if (cog_out) {
        auto cog = open_out(*cog_out);
        write_cog(cog, result.cog);
    }
    return result.summary;
}

std::vector<calibration::MotionSpec> mix_from_json(std::string_view text) {
    std::vector<calibration::MotionSpec> mix;
    try {
        const auto doc = json::parse(text);
        if (!doc.is_array()) throw ConfigError("motion mix must be an array");
        for (const auto& m : doc) {
            check_keys(m, {"kind", "amplitude", "frequency", "duration", "phase"}, "motion");
            calibration::MotionSpec spec;
            spec.kind = calibration::motion_kind_from_string(m.at("kind").get<std::string>());
            spec.amplitude = m.at("amplitude").get<double>();
            spec.frequency = m.at("frequency").get<double>();
            spec.duration = m.at("duration").get<double>();
            read(m, "phase", spec.phase);
            calibration::validate(spec);
            mix.push_back(spec);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("motion mix: ") + e.what());
    }
    return mix;
}

calibration::ThresholdReport run_calibrate(const SessionConfig& cfg,
                                           const std::optional<std::vector<calibration::MotionSpec>>& mix,
                                           const std::filesystem::path& report_out) {
    validate(cfg);
    const auto motions = mix ? *mix : calibration::default_mix();
    const auto report = calibration::calibrate(cfg.vessel, cfg.fluid, motions, cfg.seed());
    auto out = open_out(report_out);
    out << calibration::report_to_json(report) << '\n';
    return report;
}

std::string AnalysisReport::to_json() const {
    json files_json = json::array();
    int failed = 0;
    for (const auto& f : files) {
        json entry{{"file", f.file}};
        if (!f.error.empty()) {
            ++failed;
            entry["error"] = f.error;
        } else {
            entry["channel"] = channel;
            entry["duration_ms"] = f.impact->duration_ms;
            entry["first_crossing"] = f.impact->first_crossing;
            entry["last_crossing"] = f.impact->last_crossing;
            if (f.asymmetry) {
                entry["ratio"] = std::isfinite(f.asymmetry->ratio) ? json(f.asymmetry->ratio) : json("inf");
                entry["classification"] = acoustics::to_string(f.asymmetry->classification);
            } else {
                entry["ratio"] = nullptr;
                entry["classification"] = nullptr;
            }
        }
        files_json.push_back(std::move(entry));
    }
    const auto measured = static_cast<int>(files.size()) - failed;
    return json{{"files", files_json},
                {"measured", measured},
                {"failed", failed},
                {"mean_duration_ms", mean_duration_ms ? json(*mean_duration_ms) : json(nullptr)}}
        .dump(2);
}

AnalysisReport analyze(const std::vector<std::filesystem::path>& wav_paths, const AnalyzeOptions& options) {
    if (wav_paths.empty()) throw InputError("no input files");
    AnalysisReport report;
    report.channel = options.channel;
    std::vector<acoustics::ImpactMeasurement> measured;
    for (const auto& path : wav_paths) {
        FileAnalysis fa;
        fa.file = path.string();
        try {
            const auto clip = acoustics::load_wav_file(path);
            fa.impact = acoustics::impact_duration(clip, options.channel, options.noise_floor);
            if (clip.channel_count() == 2) {
                try {
                    fa.asymmetry = acoustics::channel_asymmetry(clip, {}, options.asymmetry_threshold);
                } catch (const InputError&) {
                    // Silent clip: the ratio is undefined, the duration is still reported.
                }
            }
            measured.push_back(*fa.impact);
        } catch (const std::exception& e) {
            fa.impact.reset();
            fa.error = e.what();
        }
        report.files.push_back(std::move(fa));
    }
    if (!measured.empty()) report.mean_duration_ms = acoustics::mean_duration(measured);
    return report;
}

AnalysisReport run_analyze(const std::vector<std::filesystem::path>& wav_paths,
                           const std::filesystem::path& report_out, const AnalyzeOptions& options) {
    auto report = analyze(wav_paths, options);
    auto out = open_out(report_out);
    out << report.to_json() << '\n';
    return report;
}

device::EmulatorState replay_to_emulator(const std::vector<engine::PulseCommand>& events) {
    device::Emulator emulator;
    for (const auto& e : events) {
        const auto frame = device::encode(e);
        emulator.feed(frame, e.t_start * 1000.0);
    }
    return emulator.state();
}

}  // namespace vibreau::harness
