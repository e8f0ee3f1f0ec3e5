#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vibreau {

/// Argument outside the domain of a geometric query.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid or unsupported configuration (layout, fluid parameters, trigger settings).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed caller input (pose streams, sample histories, empty lists).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite state detected while stepping the fluid.
class SimulationFault : public std::runtime_error {
public:
    SimulationFault(const std::string& what, long long step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    long long step() const noexcept { return step_; }

private:
    long long step_;
};

/// Binary or text file that does not match its expected format. `offset` is a byte
/// offset for binary inputs and a 1-based line number for line-delimited text.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace vibreau
