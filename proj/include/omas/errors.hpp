#pragma once

#include <stdexcept>
#include <string>

namespace omas {

// Shape of an operand does not fit the operation.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// A forward pass produced NaN/Inf. Training treats this as a hard stop.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside the mathematical domain of a function.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller violated a documented precondition.
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration file or constraint violation.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint file problems, one kind per failure mode.
struct CheckpointError : std::runtime_error {
    enum class Kind { BadMagic, BadVersion, SpecMismatch, Truncated, Io };
    Kind kind;
    CheckpointError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// A pipeline stage was requested before its upstream stage produced artifacts.
struct DependencyError : std::runtime_error {
    explicit DependencyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training loss went non-finite; carries the trace collected so far in the message.
struct TrainingDivergedError : std::runtime_error {
    explicit TrainingDivergedError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace omas
