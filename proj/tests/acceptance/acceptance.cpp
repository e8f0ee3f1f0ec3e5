// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "vibreau/acoustics.hpp"
#include "vibreau/calibration.hpp"
#include "vibreau/device.hpp"
#include "vibreau/fluid.hpp"
#include "vibreau/harness.hpp"

using namespace vibreau;
using calibration::MotionKind;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::optional<double> budget_s;
    std::function<Outcome()> run;
};

Trajectory motion(MotionKind kind, double amplitude, double frequency, double duration) {
    return calibration::generate_motion({kind, amplitude, frequency, duration}, fluid::kDefaultTimestep);
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome pulse_duration() {
    std::size_t pulses = 0, exact = 0;
    for (auto kind : {MotionKind::sway, MotionKind::shake, MotionKind::swirl}) {
        for (auto [a, f] : {std::pair{0.1, 2.0}, {0.05, 1.0}, {0.02, 0.3}}) {
            for (const auto& e : harness::simulate({}, motion(kind, a, f, 3.0)).events) {
                ++pulses;
                if (e.duration_ms == 80) ++exact;
            }
        }
    }
    return {pulses > 0 && exact == pulses, fmt("%zu/%zu pulses last 80 ms over 9 trajectories", exact, pulses)};
}

Outcome slow_silence() {
    std::size_t total = 0;
    std::string detail;
    for (auto kind : {MotionKind::sway, MotionKind::shake, MotionKind::swirl}) {
        const auto n = harness::simulate({}, motion(kind, 0.02, 0.3, 30.0)).events.size();
        total += n;
        if (!detail.empty()) detail += ", ";
        detail += std::string(calibration::to_string(kind)) + "=" + std::to_string(n);
    }
    return {total == 0, "events over 30 s: " + detail};
}

Outcome sway_laterality() {
    const double f = 2.0;
    const harness::SessionConfig cfg;
    const auto layout = harness::make_layout(cfg);
    const auto events = harness::simulate(cfg, motion(MotionKind::sway, 0.1, f, 10.0)).events;
    std::size_t proximity = 0, in_phase = 0, left = 0;
    for (const auto& e : events) {
        if (e.cause != engine::Cause::proximity) continue;
        ++proximity;
        // x = A sin(wt): acceleration points +x (leftward motion decelerating) while sin < 0.
        if (std::sin(2 * std::numbers::pi * f * e.t_start) >= 0.0) continue;
        ++in_phase;
        if (layout.anchor_positions[static_cast<std::size_t>(e.motor)].x < -1e-9) ++left;
    }
    const double share = in_phase ? static_cast<double>(left) / static_cast<double>(in_phase) : 0.0;
    return {proximity >= 1 && in_phase >= 1 && share >= 0.8,
            fmt("%zu proximity events; %zu/%zu in leftward-deceleration half-cycles hit the left half (%.0f%%)",
                proximity, left, in_phase, 100 * share)};
}

Outcome shake_synchrony() {
    const harness::SessionConfig cfg;
    const auto events = harness::simulate(cfg, motion(MotionKind::shake, 0.1, 2.0, 10.0)).events;
    std::map<double, std::set<int>> bursts;
    for (const auto& e : events) {
        if (e.cause == engine::Cause::vertical) bursts[e.t_start].insert(e.motor);
    }
    std::size_t full = 0;
    for (const auto& [t, motors] : bursts) {
        if (static_cast<int>(motors.size()) == cfg.actuators.motor_count) ++full;
    }
    return {full >= 1, fmt("%zu of %zu vertical bursts fire all %d motors at one t_start", full, bursts.size(),
                           cfg.actuators.motor_count)};
}

Outcome calibration_sanity() {
    const harness::SessionConfig cfg;
    const auto mix = calibration::default_mix();
    const auto a = calibration::calibrate(cfg.vessel, cfg.fluid, mix, cfg.seed());
    const auto b = calibration::calibrate(cfg.vessel, cfg.fluid, mix, cfg.seed());
    const bool monotone = a.p25 <= a.p50 && a.p50 <= a.p75 && a.p75 <= a.p90;
    return {monotone && a.selected == a.p25 && a == b,
            fmt("p25=%.4g p50=%.4g p75=%.4g p90=%.4g selected=%.4g samples=%lld repeat=%s", a.p25, a.p50, a.p75,
                a.p90, a.selected, a.sample_count, a == b ? "identical" : "DIFFERENT")};
}

Outcome fluid_invariants() {
    const fluid::FluidParams p;
    bool count_ok = true;
    double worst_excess = 0.0, worst_axis = 0.0;
    for (const auto& profile : {vessel::beaker(), vessel::erlen(), vessel::florence()}) {
        for (auto kind : {MotionKind::sway, MotionKind::shake, MotionKind::swirl}) {
            auto s = fluid::spawn(profile, p);
            const auto poses = motion(kind, 0.1, 2.0, 3.0);
            for (std::size_t k = 0; k < poses.size(); ++k) {
                s = fluid::step(s, p, profile, fluid::drive_at(poses, k, p.timestep));
                count_ok = count_ok && s.positions.size() == static_cast<std::size_t>(p.particle_count) &&
                           s.velocities.size() == s.positions.size();
                for (const auto& x : s.positions) {
                    const double z = std::clamp(x.z, 0.0, profile.height());
                    worst_excess = std::max({worst_excess, -x.z, x.z - profile.height(),
                                             radial(x) - vessel::profile_radius(profile, z)});
                }
            }
        }
        auto still = fluid::spawn(profile, p);
        fluid::settle(still, p, profile, 5.0);
        worst_axis = std::max(worst_axis, radial(fluid::center_of_gravity(still)));
    }
    return {count_ok && worst_excess <= 1e-3 && worst_axis <= 1e-3,
            fmt("count %s; worst containment excess %.3g m; worst settled CoG offset %.3g m",
                count_ok ? "constant" : "CHANGED", worst_excess, worst_axis)};
}

Outcome cog_oracle() {
    double worst = 0.0;
    const std::vector<vessel::VesselProfile> profiles{vessel::beaker(), vessel::erlen(), vessel::florence()};
    for (int i = 0; i < 100; ++i) {
        fluid::FluidParams p;
        p.seed = 1000 + static_cast<std::uint64_t>(i);
        p.particle_count = 50 + 7 * i;
        const auto& profile = profiles[static_cast<std::size_t>(i % 3)];
        auto s = fluid::spawn(profile, p);
        const auto poses = motion(static_cast<MotionKind>(i % 3), 0.05, 1.5, 0.2);
        for (std::size_t k = 0; k < poses.size(); ++k) s = fluid::step(s, p, profile, fluid::drive_at(poses, k, p.timestep));
        long double x = 0, y = 0, z = 0;
        for (const auto& q : s.positions) {
            x += q.x;
            y += q.y;
            z += q.z;
        }
        const auto n = static_cast<long double>(s.positions.size());
        const Vec3 oracle{static_cast<double>(x / n), static_cast<double>(y / n), static_cast<double>(z / n)};
        worst = std::max(worst, distance(fluid::center_of_gravity(s), oracle));
    }
    return {worst <= 1e-12, fmt("worst deviation from brute-force mean over 100 configurations: %.3g m", worst)};
}

Outcome acoustics_checks() {
    using namespace acoustics;
    const auto corpus = testgen::impact_corpus();
    std::vector<ImpactMeasurement> measured;
    long long mismatched = 0, designed_total = 0;
    bool scale_ok = true;
    for (const auto& c : corpus) {
        const auto m = impact_duration(c.clip, 0);
        if (static_cast<long long>(m.last_crossing - m.first_crossing) != c.designed_samples) ++mismatched;
        designed_total += c.designed_samples;
        measured.push_back(m);
        const auto base = impact_duration(c.clip, 0, 0.0);
        for (double k : {0.5, 0.037, 0.9}) {
            auto scaled = c.clip;
            for (auto& v : scaled.channels[0]) v *= k;
            const auto s = impact_duration(scaled, 0, 0.0);
            scale_ok = scale_ok && s.first_crossing == base.first_crossing && s.last_crossing == base.last_crossing;
        }
    }
    const double oracle = 1000.0 * static_cast<double>(designed_total) / testgen::kCorpusRate / 81.0;
    const double mean = mean_duration(measured);
    const bool corpus_ok = corpus.size() == 81 && mismatched == 0 && std::abs(mean - oracle) <= 1e-9;

    std::vector<double> x(241);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 * std::sin(2 * std::numbers::pi * 200.0 * i / 48000.0);
    AudioClip sine;
    sine.channels = {x};
    sine = load_pcm(encode_wav(sine));
    const double sine_ms = impact_duration(sine, 0, 0.0).duration_ms;
    const bool sine_ok = std::abs(sine_ms - 5.0) <= 1000.0 / 48000.0;

    return {corpus_ok && sine_ok && scale_ok,
            fmt("corpus mean %.4f ms vs oracle %.4f ms (%lld clip mismatches); 200 Hz cycle %.4f ms; scale %s", mean,
                oracle, mismatched, sine_ms, scale_ok ? "invariant" : "VARIES")};
}

Outcome protocol_checks() {
    using namespace device;
    long long roundtrip_bad = 0, undetected = 0, frames = 0;
    for (int motor = 0; motor <= kMaxMotor; ++motor) {
        for (int strength = 0; strength <= 255; ++strength) {
            for (int duration : {0, 80, 65535}) {
                const DeviceCommand c{motor, strength, duration};
                const auto f = encode(c);
                const auto r = decode(f);
                if (r.status != DecodeStatus::ok || !(r.command == c)) ++roundtrip_bad;
                const bool sampled = strength == 0 || strength == 150 || strength == 200 || strength == 255;
                if (!sampled) continue;
                ++frames;
                for (std::size_t pos = 0; pos < kFrameSize; ++pos) {
                    for (int v = 0; v < 256; ++v) {
                        if (v == f[pos]) continue;
                        auto g = f;
                        g[pos] = static_cast<std::uint8_t>(v);
                        if (decode(g).status == DecodeStatus::ok) ++undetected;
                    }
                }
            }
        }
    }
    const auto full = power_draw(255);
    const auto mid = power_draw(150);
    const bool power_ok = std::abs(full.average_power - 1.645) <= 0.01 * 1.645 &&
                          std::abs(mid.effective_voltage - 2.94) <= 0.01 * 2.94;
    return {roundtrip_bad == 0 && undetected == 0 && power_ok,
            fmt("%lld round-trip failures; %lld undetected corruptions over %lld frames; 255 -> %.4f W, 150 -> %.3f V",
                roundtrip_bad, undetected, frames, full.average_power, mid.effective_voltage)};
}

Outcome end_to_end_determinism() {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "vibreau_acceptance";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "trajectory.jsonl");
        harness::write_trajectory(out, motion(MotionKind::sway, 0.1, 2.0, 10.0));
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    };
    harness::SessionConfig cfg;
    cfg.fluid.seed = 7;
    harness::run_simulate(cfg, dir / "trajectory.jsonl", dir / "a.jsonl");
    harness::run_simulate(cfg, dir / "trajectory.jsonl", dir / "b.jsonl");
    const auto a = slurp(dir / "a.jsonl");
    const auto b = slurp(dir / "b.jsonl");
    fs::remove_all(dir);
    return {!a.empty() && a == b, fmt("event logs of %zu and %zu bytes are %s", a.size(), b.size(),
                                      a == b ? "byte-identical" : "DIFFERENT")};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"pulse duration", 10.0, pulse_duration},
        {"slow-motion silence", 30.0, slow_silence},
        {"fast-sway laterality", 60.0, sway_laterality},
        {"vertical-shake synchrony", 60.0, shake_synchrony},
        {"calibration sanity", 300.0, calibration_sanity},
        {"fluid invariants", std::nullopt, fluid_invariants},
        {"CoG oracle", std::nullopt, cog_oracle},
        {"acoustics", std::nullopt, acoustics_checks},
        {"protocol", std::nullopt, protocol_checks},
        {"end-to-end determinism", std::nullopt, end_to_end_determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool pass = o.pass;
        std::string timing = fmt("%.1f s", secs);
        if (c.budget_s) {
            timing += fmt(" of %.0f s", *c.budget_s);
            if (secs > *c.budget_s) pass = false;
        }
        if (!pass) ++failed;
        std::printf("%s  %-26s %s [%s]\n", pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), timing.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
