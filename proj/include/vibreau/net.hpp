#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <string>

#include "vibreau/device.hpp"
#include "vibreau/live.hpp"

namespace vibreau::net {

struct ServeOptions {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 8765;  // 0 picks a free port
    /// Silence after which held poses start advancing the simulation.
    std::chrono::milliseconds hold_after{250};
    double cog_rate = live::kDefaultCogRate;
};

/// Serves one LiveSession over TCP with length-prefixed JSON messages. The socket is
/// bound on construction; run() accepts a single client and returns when it leaves
/// or stop() is called.
class LiveServer {
public:
    LiveServer(harness::SessionConfig cfg, ServeOptions options);
    ~LiveServer();

    std::uint16_t port() const;
    void run();
    /// Thread-safe.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct DeviceOptions {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 8766;
    std::chrono::milliseconds heartbeat{1000};
};

/// Raw byte-stream endpoint in front of a device emulator. Clients may connect one
/// after another; the emulator state survives disconnects. A state-dump line is
/// written to `dumps` on every heartbeat. The emulator clock is milliseconds since
/// construction.
class DeviceServer {
public:
    DeviceServer(DeviceOptions options, std::ostream& dumps, std::ostream& log);
    ~DeviceServer();

    std::uint16_t port() const;
    void run();
    /// Thread-safe.
    void stop();
    /// Calls `fn` with the emulator while holding the feed lock.
    void inspect(const std::function<void(const device::Emulator&)>& fn);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace vibreau::net
