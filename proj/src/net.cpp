#include "vibreau/net.hpp"

#include <array>
#include <mutex>
#include <optional>

#include <boost/asio.hpp>

#include "vibreau/errors.hpp"

namespace vibreau::net {

namespace asio = boost::asio;
using asio::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

tcp::acceptor bind_acceptor(asio::io_context& io, const std::string& address, std::uint16_t port) {
    tcp::acceptor acceptor(io);
    const tcp::endpoint endpoint(asio::ip::make_address(address), port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(tcp::acceptor::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen();
    return acceptor;
}

}  // namespace

struct LiveServer::Impl {
    asio::io_context io;
    tcp::acceptor acceptor;
    std::optional<tcp::socket> socket;
    asio::steady_timer ticker{io};
    live::LiveSession session;
    ServeOptions options;
    live::FrameReader reader;
    std::array<std::uint8_t, 4096> buffer{};
    Clock::time_point last_input = Clock::now();
    Clock::duration step;

    Impl(harness::SessionConfig cfg, ServeOptions opts)
        : acceptor(bind_acceptor(io, opts.bind_address, opts.port)),
          session(std::move(cfg), opts.cog_rate),
          options(std::move(opts)),
          step(std::chrono::duration_cast<Clock::duration>(
              std::chrono::duration<double>(session.config().timestep()))) {}

    void send(const std::vector<std::string>& messages) {
        if (!socket) return;
        boost::system::error_code ec;
        for (const auto& m : messages) {
            const auto frame = live::encode_frame(m);
            asio::write(*socket, asio::buffer(frame), ec);
            if (ec) {
                io.stop();
                return;
            }
        }
    }

    void start() {
        acceptor.async_accept([this](boost::system::error_code ec, tcp::socket s) {
            if (ec) {
                io.stop();
                return;
            }
            socket.emplace(std::move(s));
            acceptor.close();
            send({session.hello()});
            last_input = Clock::now();
            read();
            ticker.expires_after(step);
            tick();
        });
    }

    void read() {
        socket->async_read_some(asio::buffer(buffer), [this](boost::system::error_code ec, std::size_t n) {
            if (ec) {
                io.stop();
                return;
            }
            try {
                reader.push(std::span(buffer.data(), n));
                while (auto msg = reader.next()) {
                    last_input = Clock::now();
                    send(session.on_message(*msg));
                }
            } catch (const FormatError& e) {
                send({nlohmann::json{{"type", "error"}, {"message", e.what()}, {"request", ""}}.dump()});
                io.stop();
                return;
            }
            read();
        });
    }

    void tick() {
        ticker.async_wait([this](boost::system::error_code ec) {
            if (ec) return;
            const bool idle = Clock::now() - last_input >= options.hold_after;
            if (session.preset() || idle) send(session.on_idle_tick());
            ticker.expires_at(ticker.expiry() + step);
            tick();
        });
    }
};

LiveServer::LiveServer(harness::SessionConfig cfg, ServeOptions options)
    : impl_(std::make_unique<Impl>(std::move(cfg), std::move(options))) {}

LiveServer::~LiveServer() = default;

std::uint16_t LiveServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void LiveServer::run() {
    impl_->start();
    impl_->io.run();
}

void LiveServer::stop() { impl_->io.stop(); }

struct DeviceServer::Impl {
    asio::io_context io;
    tcp::acceptor acceptor;
    std::optional<tcp::socket> socket;
    asio::steady_timer heartbeat{io};
    DeviceOptions options;
    std::ostream& dumps;
    std::ostream& log;
    std::mutex mutex;
    device::Emulator emulator;
    std::size_t faults_logged = 0;
    std::array<std::uint8_t, 4096> buffer{};
    Clock::time_point origin = Clock::now();

    Impl(DeviceOptions opts, std::ostream& dump_stream, std::ostream& log_stream)
        : acceptor(bind_acceptor(io, opts.bind_address, opts.port)),
          options(std::move(opts)),
          dumps(dump_stream),
          log(log_stream) {}

    double now_ms() const {
        return std::chrono::duration<double, std::milli>(Clock::now() - origin).count();
    }

    void accept() {
        acceptor.async_accept([this](boost::system::error_code ec, tcp::socket s) {
            if (ec) {
                if (ec != asio::error::operation_aborted) log << "accept failed: " << ec.message() << '\n';
                return;
            }
            log << "client connected\n";
            socket.emplace(std::move(s));
            read();
        });
    }

    void read() {
        socket->async_read_some(asio::buffer(buffer), [this](boost::system::error_code ec, std::size_t n) {
            if (ec) {
                log << "connection closed: " << ec.message() << '\n';
                socket.reset();
                accept();
                return;
            }
            {
                std::lock_guard lock(mutex);
                const auto& state = emulator.feed(std::span(buffer.data(), n), now_ms());
                for (; faults_logged < state.fault_log.size(); ++faults_logged) {
                    const auto& f = state.fault_log[faults_logged];
                    log << "fault at " << f.at_ms << " ms: " << device::to_string(f.kind) << " (" << f.detail
                        << ")\n";
                }
            }
            read();
        });
    }

    void beat() {
        heartbeat.async_wait([this](boost::system::error_code ec) {
            if (ec) return;
            {
                std::lock_guard lock(mutex);
                emulator.advance(now_ms());
                dumps << emulator.state_dump() << '\n' << std::flush;
            }
            heartbeat.expires_at(heartbeat.expiry() + options.heartbeat);
            beat();
        });
    }
};

DeviceServer::DeviceServer(DeviceOptions options, std::ostream& dumps, std::ostream& log)
    : impl_(std::make_unique<Impl>(std::move(options), dumps, log)) {}

DeviceServer::~DeviceServer() = default;

std::uint16_t DeviceServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void DeviceServer::run() {
    impl_->accept();
    impl_->heartbeat.expires_after(impl_->options.heartbeat);
    impl_->beat();
    impl_->io.run();
}

void DeviceServer::stop() { impl_->io.stop(); }

void DeviceServer::inspect(const std::function<void(const device::Emulator&)>& fn) {
    std::lock_guard lock(impl_->mutex);
    fn(impl_->emulator);
}

}  // namespace vibreau::net
