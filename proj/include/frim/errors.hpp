#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace frim {

/// Base class for all frim errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or contract violation at an operation boundary.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// The requested construction is ruled out by the spectral regime
/// (e.g. no usable eigenvalue gap exists for the given operator parameters).
class RegimeError : public Error {
public:
    using Error::Error;
};

/// Inconsistent solver configuration (horizon, tolerance, sigma window).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or blow-up encountered during evaluation.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Chart evaluation requested outside the tabulated box.
class ExtrapolationError : public Error {
public:
    using Error::Error;
};

/// Fixed-point iteration did not converge; carries the update-norm history
/// so the caller can inspect the measured contraction behaviour.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, std::vector<double> history)
        : Error(msg), history_(std::move(history)) {}

    const std::vector<double>& update_history() const { return history_; }

private:
    std::vector<double> history_;
};

/// File format or I/O failure; message carries the path.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace frim
