#pragma once

#include <stdexcept>
#include <string>

namespace ekb {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad argument passed to an operation (non-finite input, shape mismatch, ...).
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

/// Covariance matrix could not be factorized, even after diagonal jitter.
class DegenerateCovariance : public Error {
public:
    explicit DegenerateCovariance(const std::string& msg) : Error(msg) {}
};

/// Linear solver failed to reach its tolerance within the iteration budget.
class SolverDivergence : public Error {
public:
    SolverDivergence(const std::string& msg, double residual)
        : Error(msg), residual_norm(residual) {}
    double residual_norm;
};

/// Run-configuration file problem, anchored to a line when one is known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_number(line) {}
    int line_number;
};

/// Filesystem / serialization failure.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace ekb
