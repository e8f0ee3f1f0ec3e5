#include <doctest.h>

#include <json.hpp>

#include "vibreau/errors.hpp"
#include "vibreau/harness.hpp"
#include "vibreau/live.hpp"

using namespace vibreau;
using namespace vibreau::live;
using nlohmann::json;

namespace {

std::string pose_message(const PoseSample& p) {
    return json{{"type", "pose"},
                {"t", p.t},
                {"position", {p.position.x, p.position.y, p.position.z}},
                {"orientation", {p.orientation.w, p.orientation.x, p.orientation.y, p.orientation.z}}}
        .dump();
}

std::vector<json> parse_all(const std::vector<std::string>& out) {
    std::vector<json> docs;
    for (const auto& s : out) docs.push_back(json::parse(s));
    return docs;
}

std::vector<json> of_type(const std::vector<json>& docs, const std::string& type) {
    std::vector<json> r;
    for (const auto& d : docs) {
        if (d["type"] == type) r.push_back(d);
    }
    return r;
}

struct Run {
    std::vector<json> messages;
    void take(const std::vector<std::string>& out) {
        for (auto& d : parse_all(out)) messages.push_back(std::move(d));
    }
};

Trajectory motion(calibration::MotionKind kind, double amplitude, double frequency, double duration) {
    return calibration::generate_motion({kind, amplitude, frequency, duration}, fluid::kDefaultTimestep);
}

engine::PulseCommand as_pulse(const json& m) {
    return {m["t_start"].get<double>(), m["motor"].get<int>(), m["duration_ms"].get<int>(), m["strength"].get<int>(),
            engine::cause_from_string(m["cause"].get<std::string>())};
}

}  // namespace

TEST_CASE("frames: length prefix is big-endian") {
    const auto f = encode_frame("{}");
    CHECK(f == std::vector<std::uint8_t>{0, 0, 0, 2, '{', '}'});
    const std::string big(300, 'x');
    const auto g = encode_frame(big);
    CHECK(g[2] == 1);
    CHECK(g[3] == 44);
    CHECK_THROWS_AS(encode_frame(std::string(kMaxPayload + 1, 'x')), InputError);
}

TEST_CASE("frames: the reader reassembles split and coalesced input") {
    FrameReader reader;
    std::vector<std::uint8_t> stream;
    for (const auto* s : {"{\"a\":1}", "", "{\"b\":2}"}) {
        const auto f = encode_frame(s);
        stream.insert(stream.end(), f.begin(), f.end());
    }
    std::vector<std::string> got;
    for (auto b : stream) {
        reader.push(std::span(&b, 1));
        while (auto m = reader.next()) got.push_back(*m);
    }
    CHECK(got == std::vector<std::string>{"{\"a\":1}", "", "{\"b\":2}"});

    FrameReader all;
    all.push(stream);
    CHECK(all.next() == "{\"a\":1}");
    CHECK(all.next() == "");
    CHECK(all.next() == "{\"b\":2}");
    CHECK_FALSE(all.next());
}

TEST_CASE("frames: oversized headers are rejected") {
    FrameReader reader;
    const auto ok = encode_frame("{}");
    reader.push(ok);
    const std::vector<std::uint8_t> huge{0x00, 0x20, 0x00, 0x00};
    reader.push(huge);
    CHECK(reader.next() == "{}");
    try {
        reader.next();
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(e.offset() == 6);
    }
}

TEST_CASE("hello is a snapshot of the session") {
    LiveSession s(harness::SessionConfig{});
    const auto doc = json::parse(s.hello());
    CHECK(doc["type"] == "snapshot");
    CHECK(doc["motor_count"] == 8);
    CHECK(doc["motors"].size() == 8);
    CHECK(doc["strength"] == 255);
    CHECK(doc["pulse_duration_ms"] == 80);
    CHECK(doc["vessel"]["name"] == "beaker");
    CHECK(doc["preset"].is_null());
    CHECK(doc["steps"] == 0);
}

TEST_CASE("streamed poses give the same pulses as the batch pipeline") {
    using calibration::MotionKind;
    for (auto kind : {MotionKind::sway, MotionKind::shake}) {
        const auto traj = motion(kind, 0.1, 2.0, 4.0);
        const auto batch = harness::simulate(harness::SessionConfig{}, traj);
        REQUIRE_FALSE(batch.events.empty());

        LiveSession s(harness::SessionConfig{});
        Run run;
        for (const auto& p : traj) run.take(s.on_message(pose_message(p)));
        run.take(s.on_idle_tick());
        CHECK(s.steps() == static_cast<long long>(traj.size()));

        std::vector<engine::PulseCommand> live;
        for (const auto& m : of_type(run.messages, "pulse")) live.push_back(as_pulse(m));
        CHECK(live == batch.events);
        CHECK(of_type(run.messages, "error").empty());
    }
}

TEST_CASE("fast sway pulses are proximity pulses") {
    LiveSession s(harness::SessionConfig{});
    Run run;
    for (const auto& p : motion(calibration::MotionKind::sway, 0.1, 2.0, 10.0)) run.take(s.on_message(pose_message(p)));
    const auto pulses = of_type(run.messages, "pulse");
    REQUIRE_FALSE(pulses.empty());
    for (const auto& p : pulses) CHECK(p["cause"] == "proximity");
}

TEST_CASE("CoG messages are decimated to 30 per second") {
    LiveSession s(harness::SessionConfig{});
    Run run;
    const auto traj = motion(calibration::MotionKind::swirl, 0.05, 1.0, 3.0);
    for (const auto& p : traj) run.take(s.on_message(pose_message(p)));
    const auto cogs = of_type(run.messages, "cog");
    CHECK(cogs.size() == 90);
    for (std::size_t i = 1; i < cogs.size(); ++i) {
        CHECK(cogs[i]["t"].get<double>() - cogs[i - 1]["t"].get<double>() >= 1.0 / 30.0 - 1e-9);
    }
    LiveSession slow(harness::SessionConfig{}, 10.0);
    Run r10;
    for (const auto& p : traj) r10.take(slow.on_message(pose_message(p)));
    CHECK(of_type(r10.messages, "cog").size() == 30);
}

TEST_CASE("silence holds the vessel still") {
    LiveSession s(harness::SessionConfig{});
    Run run;
    run.take(s.on_message(pose_message({0.0, {}, {}})));
    for (int i = 0; i < 450; ++i) run.take(s.on_idle_tick());
    CHECK(s.steps() == 450);
    CHECK(of_type(run.messages, "pulse").empty());
    CHECK(s.last_pose_time() == doctest::Approx(450 * fluid::kDefaultTimestep));
}

TEST_CASE("idle ticks before the first pose do nothing") {
    LiveSession s(harness::SessionConfig{});
    CHECK(s.on_idle_tick().empty());
    CHECK(s.steps() == 0);
    CHECK_FALSE(s.last_pose_time());
}

TEST_CASE("pose validation") {
    const double dt = fluid::kDefaultTimestep;
    LiveSession s(harness::SessionConfig{});
    CHECK(parse_all(s.on_message(pose_message({0.0, {}, {}}))).empty());
    auto reply = parse_all(s.on_message(pose_message({0.0, {}, {}})));
    REQUIRE(reply.size() == 1);
    CHECK(reply[0]["type"] == "error");
    CHECK(reply[0]["request"] == "pose");

    reply = parse_all(s.on_message(pose_message({0.5 * dt, {}, {}})));
    CHECK(reply[0]["type"] == "error");
    reply = parse_all(s.on_message(pose_message({dt, {}, {0.5, 0, 0, 0}})));
    CHECK(reply[0]["type"] == "error");
    reply = parse_all(s.on_message(R"({"type":"pose","t":1.0,"position":[0,0],"orientation":[1,0,0,0]})"));
    CHECK(reply[0]["type"] == "error");

    // A gap of three steps is filled with two held poses.
    s.on_message(pose_message({3 * dt, {}, {}}));
    CHECK(s.steps() == 3);
    CHECK(s.last_pose_time() == doctest::Approx(3 * dt));
}

TEST_CASE("malformed messages get an error reply") {
    LiveSession s(harness::SessionConfig{});
    for (const auto* text : {"not json", "[1,2]", R"({"type":7})", R"({"type":"dance"})", R"({"type":"pose"})"}) {
        const auto reply = parse_all(s.on_message(text));
        REQUIRE(reply.size() == 1);
        CHECK(reply[0]["type"] == "error");
        CHECK(reply[0]["message"].is_string());
    }
    CHECK(json::parse(s.on_message(R"({"type":"snapshot"})")[0])["type"] == "snapshot");
}

TEST_CASE("config patches") {
    LiveSession s(harness::SessionConfig{});
    auto reply = parse_all(s.on_message(R"({"type":"config","motor_count":6})"));
    REQUIRE(reply.size() == 1);
    CHECK(reply[0]["type"] == "snapshot");
    CHECK(reply[0]["motor_count"] == 6);
    CHECK(reply[0]["motors"].size() == 6);

    reply = parse_all(s.on_message(R"({"type":"config","motor_count":5})"));
    CHECK(reply[0]["type"] == "error");
    CHECK(reply[0]["request"] == "config");
    CHECK(s.config().actuators.motor_count == 6);

    reply = parse_all(s.on_message(R"({"type":"config","strength":300,"motor_count":4})"));
    CHECK(reply[0]["type"] == "error");
    CHECK(s.config().actuators.motor_count == 6);

    reply = parse_all(s.on_message(R"({"type":"config","volume":3})"));
    CHECK(reply[0]["type"] == "error");
}

TEST_CASE("strength patches carry into pulses") {
    LiveSession s(harness::SessionConfig{});
    s.on_message(R"({"type":"config","strength":150})");
    Run run;
    for (const auto& p : motion(calibration::MotionKind::shake, 0.1, 2.0, 3.0)) run.take(s.on_message(pose_message(p)));
    const auto pulses = of_type(run.messages, "pulse");
    REQUIRE_FALSE(pulses.empty());
    for (const auto& p : pulses) CHECK(p["strength"] == 150);
}

TEST_CASE("presets drive the vessel on idle ticks") {
    LiveSession s(harness::SessionConfig{});
    auto reply = parse_all(
        s.on_message(R"({"type":"config","preset":{"kind":"shake","amplitude":0.1,"frequency":2}})"));
    REQUIRE(reply[0]["type"] == "snapshot");
    CHECK(reply[0]["preset"]["kind"] == "shake");
    REQUIRE(s.preset());

    Run run;
    for (int i = 0; i < 270; ++i) run.take(s.on_idle_tick());
    const auto pulses = of_type(run.messages, "pulse");
    REQUIRE_FALSE(pulses.empty());
    for (const auto& p : pulses) CHECK(p["cause"] == "vertical");

    reply = parse_all(s.on_message(pose_message({100.0, {}, {}})));
    CHECK(reply[0]["type"] == "error");

    reply = parse_all(s.on_message(R"({"type":"config","preset":"none"})"));
    CHECK(reply[0]["preset"].is_null());
    CHECK_FALSE(s.preset());
    const double next = *s.last_pose_time() + fluid::kDefaultTimestep;
    CHECK(of_type(parse_all(s.on_message(pose_message({next, {}, {}}))), "error").empty());

    reply = parse_all(s.on_message(R"({"type":"config","preset":{"kind":"spin","amplitude":0.1,"frequency":2}})"));
    CHECK(reply[0]["type"] == "error");
}
