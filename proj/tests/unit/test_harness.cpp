#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "corpus.hpp"
#include "vibreau/errors.hpp"
#include "vibreau/harness.hpp"

using namespace vibreau;
using namespace vibreau::harness;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("vibreau_harness_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path operator/(const std::string& name) const { return path / name; }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Trajectory preset(calibration::MotionKind kind, double amplitude, double frequency, double duration) {
    return calibration::generate_motion({kind, amplitude, frequency, duration}, fluid::kDefaultTimestep);
}

}  // namespace

TEST_CASE("default config matches the reference preset") {
    const SessionConfig cfg;
    CHECK(cfg.vessel.name() == "beaker");
    CHECK(cfg.actuators.motor_count == 8);
    CHECK(cfg.actuators.mounting == vessel::Mounting::inside);
    CHECK(cfg.trigger.pulse_strength == 255);
    CHECK(cfg.trigger.pulse_duration_ms == 80);
    CHECK(cfg.seed() == 7);
    CHECK(cfg.reference_height() == Approx(0.165));
    CHECK_NOTHROW(validate(cfg));
    CHECK(make_layout(cfg).motor_count == 8);
}

TEST_CASE("config JSON parsing") {
    const auto cfg = config_from_json(R"({"vessel":"erlen","seed":11,
        "actuators":{"motor_count":6,"mounting":"outside"},
        "trigger":{"pulse_strength":150}})");
    CHECK(cfg.vessel.name() == "erlen");
    CHECK(cfg.seed() == 11);
    CHECK(cfg.actuators.motor_count == 6);
    CHECK(cfg.actuators.mounting == vessel::Mounting::outside);
    CHECK(cfg.trigger.pulse_strength == 150);
    CHECK(cfg.trigger.pulse_duration_ms == 80);

    const auto inline_vessel = config_from_json(
        R"({"vessel":{"name":"jar","height":0.1,"knots":[[0.0,0.04],[0.1,0.04]]}})");
    CHECK(inline_vessel.vessel.name() == "jar");

    CHECK_THROWS_AS(config_from_json(R"({"colour":"red"})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"actuators":{"motor_count":5}})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"vessel":"teapot"})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"trigger":{"pulse_strength":300}})"), ConfigError);
    CHECK_THROWS_AS(config_from_json("{not json"), ConfigError);
}

TEST_CASE("config JSON round trip") {
    auto cfg = config_from_json(R"({"vessel":"florence","seed":3,"actuators":{"motor_count":4}})");
    const auto back = config_from_json(config_to_json(cfg));
    CHECK(config_to_json(back) == config_to_json(cfg));
    CHECK(back.actuators.motor_count == 4);
    CHECK(back.seed() == 3);
}

TEST_CASE("pose lines round trip") {
    const PoseSample p{0.5, {0.01, -0.02, 0.03}, axis_angle({0, 0, 1}, 0.3)};
    const auto q = parse_pose(format_pose(p));
    CHECK(q == p);
    CHECK_THROWS_AS(parse_pose(R"({"t":0})"), InputError);
}

TEST_CASE("read_trajectory validates the stream") {
    const double dt = fluid::kDefaultTimestep;
    std::stringstream good;
    write_trajectory(good, preset(calibration::MotionKind::sway, 0.1, 2.0, 0.1));
    good << "\n";
    CHECK(read_trajectory(good, dt).size() == 9);

    auto expect_line = [&](const std::string& text, std::size_t line) {
        std::stringstream in(text);
        try {
            read_trajectory(in, dt);
            FAIL("expected a format error");
        } catch (const FormatError& e) {
            CHECK(e.offset() == line);
        }
    };
    const std::string first = R"({"t":0,"position":[0,0,0],"orientation":[1,0,0,0]})";
    expect_line(first + "\n" + R"({"t":0,"position":[0,0,0],"orientation":[1,0,0,0]})", 2);
    expect_line(first + "\n\n" + R"({"t":0.02,"position":[0,0,0],"orientation":[1,0,0,0]})", 3);
    expect_line(R"({"t":0,"position":[0,0,0],"orientation":[0.9,0,0,0]})", 1);
    expect_line(first + "\nnonsense", 2);
}

TEST_CASE("event logs round trip") {
    const std::vector<engine::PulseCommand> events{{0.1, 3, 80, 255, engine::Cause::proximity},
                                                   {0.2, 0, 80, 150, engine::Cause::vertical}};
    std::stringstream s;
    write_events(s, events);
    CHECK(read_events(s) == events);
    std::stringstream bad("\n{\"t_start\":1}\n");
    try {
        read_events(bad);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(e.offset() == 2);
    }
}

TEST_CASE("simulate: a static trajectory produces no events") {
    const auto traj = preset(calibration::MotionKind::sway, 0.0, 1.0, 3.0);
    const auto r = simulate(SessionConfig{}, traj);
    CHECK(r.summary.steps == 270);
    CHECK(r.events.empty());
    CHECK(r.summary.by_motor == std::vector<long long>(8, 0));
}

TEST_CASE("simulate: fast sway fires proximity pulses only") {
    const auto r = simulate(SessionConfig{}, preset(calibration::MotionKind::sway, 0.1, 2.0, 10.0));
    CHECK(r.summary.by_cause.at("proximity") >= 1);
    CHECK(r.summary.by_cause.at("vertical") == 0);
    double prev = 0.0;
    for (const auto& e : r.events) {
        CHECK(e.t_start >= prev);
        CHECK(e.strength == 255);
        CHECK(e.duration_ms == 80);
        prev = e.t_start;
    }
}

TEST_CASE("simulate: strength follows the config") {
    SessionConfig cfg;
    cfg.trigger.pulse_strength = 150;
    const auto r = simulate(cfg, preset(calibration::MotionKind::shake, 0.1, 2.0, 3.0));
    REQUIRE_FALSE(r.events.empty());
    for (const auto& e : r.events) CHECK(e.strength == 150);
}

TEST_CASE("run_simulate writes byte-identical logs for identical inputs") {
    TempDir dir;
    std::ofstream(dir / "traj.jsonl") << [] {
        std::stringstream s;
        write_trajectory(s, preset(calibration::MotionKind::sway, 0.1, 2.0, 5.0));
        return s.str();
    }();
    const SessionConfig cfg;
    const auto a = run_simulate(cfg, dir / "traj.jsonl", dir / "a.jsonl", dir / "cog.jsonl");
    const auto b = run_simulate(cfg, dir / "traj.jsonl", dir / "b.jsonl");
    CHECK(a.to_json() == b.to_json());
    CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
    CHECK_FALSE(slurp(dir / "a.jsonl").empty());
    std::ifstream cog(dir / "cog.jsonl");
    int lines = 0;
    for (std::string l; std::getline(cog, l);) ++lines;
    CHECK(lines == 450);
    CHECK_THROWS_AS(run_simulate(cfg, dir / "missing.jsonl", dir / "c.jsonl"), InputError);
}

TEST_CASE("mix documents") {
    const auto mix = mix_from_json(R"([{"kind":"swirl","amplitude":0.05,"frequency":1,"duration":60}])");
    REQUIRE(mix.size() == 1);
    CHECK(mix[0].kind == calibration::MotionKind::swirl);
    CHECK(mix[0].duration == 60.0);
    CHECK_THROWS_AS(mix_from_json(R"({"kind":"sway"})"), ConfigError);
    CHECK_THROWS_AS(mix_from_json(R"([{"kind":"sway","amplitude":-1,"frequency":1,"duration":60}])"), ConfigError);
}

TEST_CASE("run_calibrate: static mix writes a zero threshold") {
    TempDir dir;
    const std::vector<calibration::MotionSpec> mix{{calibration::MotionKind::sway, 0.0, 1.0, 60.0}};
    const auto r = run_calibrate(SessionConfig{}, mix, dir / "report.json");
    CHECK(r.sample_count == 5400);
    CHECK(r.selected <= 1e-12);
    CHECK(calibration::report_from_json(slurp(dir / "report.json")) == r);
}

TEST_CASE("analyze: the synthetic corpus on disk") {
    TempDir dir;
    std::vector<fs::path> paths;
    long long designed = 0;
    for (const auto& c : testgen::impact_corpus()) {
        paths.push_back(dir / (c.name + ".wav"));
        acoustics::write_wav_file(paths.back(), c.clip);
        designed += c.designed_samples;
    }
    paths.push_back(dir / "missing.wav");
    const auto report = run_analyze(paths, dir / "report.json");
    REQUIRE(report.mean_duration_ms);
    const double oracle = 1000.0 * static_cast<double>(designed) / testgen::kCorpusRate / 81.0;
    CHECK(*report.mean_duration_ms == Approx(oracle).epsilon(1e-12));
    CHECK_FALSE(report.files.back().error.empty());

    const auto doc = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(doc["measured"] == 81);
    CHECK(doc["failed"] == 1);
    CHECK(doc["files"][0]["classification"] == "asymmetric");
    CHECK(doc["files"][9]["classification"] == "symmetric");
}

TEST_CASE("analyze: a single 69.95 ms fixture") {
    TempDir dir;
    // 69.95 ms at 40 kHz is exactly 2798 samples between crossings.
    auto clip = testgen::impact_clip(2798, 200, 200, 1.0, 1);
    clip.sample_rate = 40000;
    acoustics::write_wav_file(dir / "one.wav", clip);
    const auto report = analyze({dir / "one.wav"});
    REQUIRE(report.mean_duration_ms);
    CHECK(*report.mean_duration_ms == Approx(69.95).epsilon(1e-12));
    CHECK_THROWS_AS(analyze({}), InputError);
}

TEST_CASE("replayed events match emulator activations one to one") {
    const auto r = simulate(SessionConfig{}, preset(calibration::MotionKind::shake, 0.1, 2.0, 3.0));
    REQUIRE_FALSE(r.events.empty());
    const auto state = replay_to_emulator(r.events);
    REQUIRE(state.activations.size() == r.events.size());
    CHECK(state.fault_log.empty());
    for (std::size_t i = 0; i < r.events.size(); ++i) {
        CHECK(state.activations[i].command.motor == r.events[i].motor);
        CHECK(state.activations[i].command.strength == r.events[i].strength);
        CHECK(state.activations[i].command.duration_ms == r.events[i].duration_ms);
        CHECK(state.activations[i].at_ms == Approx(r.events[i].t_start * 1000.0));
    }
}
