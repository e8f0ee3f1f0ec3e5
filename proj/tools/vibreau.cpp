#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vibreau/errors.hpp"
#include "vibreau/harness.hpp"
#include "vibreau/net.hpp"

using namespace vibreau;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// kind:amplitude:frequency:duration, e.g. sway:0.1:2:10
calibration::MotionSpec parse_preset(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 4) throw InputError("preset must look like kind:amplitude:frequency:duration");
    calibration::MotionSpec spec;
    spec.kind = calibration::motion_kind_from_string(parts[0]);
    spec.amplitude = std::stod(parts[1]);
    spec.frequency = std::stod(parts[2]);
    spec.duration = std::stod(parts[3]);
    calibration::validate(spec);
    return spec;
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("-c,--config", c.config, "Session config JSON")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "Override the fluid seed");
}

harness::SessionConfig resolve(const Common& c) {
    auto cfg = c.config.empty() ? harness::SessionConfig{} : harness::load_config(c.config);
    if (c.seed) cfg.fluid.seed = *c.seed;
    harness::validate(cfg);
    return cfg;
}

std::function<void()> g_stop;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fluid-driven vibrotactile rendering pipeline"};
    app.require_subcommand(1);

    Common sim_common;
    std::string sim_traj, sim_preset, sim_events, sim_cog, sim_save, sim_report;
    auto* sim = app.add_subcommand("simulate", "Run the fluid and trigger engine over a trajectory");
    add_common(sim, sim_common);
    auto* traj_opt = sim->add_option("-t,--trajectory", sim_traj, "Pose trajectory (JSON lines)")
                         ->check(CLI::ExistingFile);
    sim->add_option("--preset", sim_preset, "Generated motion kind:amplitude:frequency:duration")
        ->excludes(traj_opt);
    sim->add_option("-e,--events", sim_events, "Event log output (JSON lines)")->required();
    sim->add_option("--cog", sim_cog, "CoG trace output (JSON lines)");
    sim->add_option("--save-trajectory", sim_save, "Write the generated preset trajectory");
    sim->add_option("--threshold-report", sim_report, "Use the selected threshold from a calibration report")
        ->check(CLI::ExistingFile);

    Common cal_common;
    std::string cal_mix, cal_report;
    double cal_seconds = 600.0;
    auto* cal = app.add_subcommand("calibrate", "Derive the acceleration threshold from a motion mix");
    add_common(cal, cal_common);
    auto* mix_opt = cal->add_option("--mix", cal_mix, "Motion list JSON")->check(CLI::ExistingFile);
    cal->add_option("--seconds", cal_seconds, "Length of the default mix")->excludes(mix_opt);
    cal->add_option("-r,--report", cal_report, "Threshold report output")->required();

    std::vector<std::string> ana_files;
    std::string ana_report;
    harness::AnalyzeOptions ana_opts;
    auto* ana = app.add_subcommand("analyze", "Measure impact durations and channel asymmetry of WAV files");
    ana->add_option("files", ana_files, "16-bit PCM WAV files");
    ana->add_option("-r,--report", ana_report, "Report output (JSON)")->required();
    ana->add_option("--channel", ana_opts.channel, "Channel to measure");
    ana->add_option("--noise-floor", ana_opts.noise_floor, "Amplitudes at or below this count as zero");
    ana->add_option("--asymmetry-threshold", ana_opts.asymmetry_threshold, "Peak ratio threshold");

    Common srv_common;
    net::ServeOptions srv_opts;
    long srv_hold_ms = 250;
    auto* srv = app.add_subcommand("serve", "Run one live session over TCP");
    add_common(srv, srv_common);
    srv->add_option("--bind", srv_opts.bind_address, "Listen address");
    srv->add_option("-p,--port", srv_opts.port, "Listen port");
    srv->add_option("--hold-ms", srv_hold_ms, "Silence before the held pose starts advancing");
    srv->add_option("--cog-rate", srv_opts.cog_rate, "Maximum CoG messages per second");

    net::DeviceOptions dev_opts;
    long dev_heartbeat_ms = 1000;
    std::string dev_dump;
    auto* dev = app.add_subcommand("emulate-device", "Emulate the motor controller on a TCP byte stream");
    dev->add_option("--bind", dev_opts.bind_address, "Listen address");
    dev->add_option("-p,--port", dev_opts.port, "Listen port");
    dev->add_option("--heartbeat-ms", dev_heartbeat_ms, "State dump interval");
    dev->add_option("--dump", dev_dump, "State dump output (JSON lines, default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            auto cfg = resolve(sim_common);
            if (!sim_report.empty()) {
                cfg.trigger.accel_threshold = calibration::report_from_json(slurp(sim_report)).selected;
            }
            Trajectory trajectory;
            if (!sim_traj.empty()) {
                trajectory = harness::load_trajectory(sim_traj, cfg.timestep());
            } else if (!sim_preset.empty()) {
                trajectory = calibration::generate_motion(parse_preset(sim_preset), cfg.timestep());
            } else {
                throw InputError("simulate needs --trajectory or --preset");
            }
            if (!sim_save.empty()) {
                std::ofstream out(sim_save);
                harness::write_trajectory(out, trajectory);
            }
            const auto result = harness::simulate(cfg, trajectory);
            std::ofstream events(sim_events);
            if (!events) throw InputError("cannot write " + sim_events);
            harness::write_events(events, result.events);
            if (!sim_cog.empty()) {
                std::ofstream cog(sim_cog);
                harness::write_cog(cog, result.cog);
            }
            std::cout << result.summary.to_json() << '\n';
        } else if (*cal) {
            const auto cfg = resolve(cal_common);
            std::optional<std::vector<calibration::MotionSpec>> mix;
            if (!cal_mix.empty()) {
                mix = harness::mix_from_json(slurp(cal_mix));
            } else {
                mix = calibration::default_mix(cal_seconds);
            }
            const auto report = harness::run_calibrate(cfg, mix, cal_report);
            std::cout << "selected threshold " << report.selected << " m/step^2 over " << report.sample_count
                      << " samples\n";
        } else if (*ana) {
            std::vector<std::filesystem::path> paths(ana_files.begin(), ana_files.end());
            const auto report = harness::run_analyze(paths, ana_report, ana_opts);
            for (const auto& f : report.files) {
                if (!f.error.empty()) std::cerr << f.file << ": " << f.error << '\n';
            }
            if (report.mean_duration_ms) std::cout << "mean duration " << *report.mean_duration_ms << " ms\n";
        } else if (*srv) {
            srv_opts.hold_after = std::chrono::milliseconds(srv_hold_ms);
            net::LiveServer server(resolve(srv_common), srv_opts);
            std::cerr << "serving on " << srv_opts.bind_address << ':' << server.port() << '\n';
            g_stop = [&server] { server.stop(); };
            std::signal(SIGINT, [](int) { g_stop(); });
            server.run();
        } else if (*dev) {
            dev_opts.heartbeat = std::chrono::milliseconds(dev_heartbeat_ms);
            std::ofstream dump_file;
            if (!dev_dump.empty()) {
                dump_file.open(dev_dump);
                if (!dump_file) throw InputError("cannot write " + dev_dump);
            }
            std::ostream& dumps = dev_dump.empty() ? std::cout : dump_file;
            net::DeviceServer server(dev_opts, dumps, std::cerr);
            std::cerr << "device emulator on " << dev_opts.bind_address << ':' << server.port() << '\n';
            g_stop = [&server] { server.stop(); };
            std::signal(SIGINT, [](int) { g_stop(); });
            server.run();
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
