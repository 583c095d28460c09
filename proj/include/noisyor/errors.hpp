#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace noisyor {

/// Base of every error raised by the library. Pipeline stages tag errors with
/// the stage name before rethrowing, so callers see where a failure happened.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message), message_(message) {}

    const char* what() const noexcept override { return full_.empty() ? message_.c_str() : full_.c_str(); }

    const std::string& message() const noexcept { return message_; }
    const std::string& stage() const noexcept { return stage_; }

    void set_stage(std::string stage) {
        stage_ = std::move(stage);
        full_ = "[" + stage_ + "] " + message_;
    }

private:
    std::string message_;
    std::string stage_;
    std::string full_;
};

/// Malformed arguments: bad dimensions, out-of-range parameters, non-finite data.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A rank assumption failed. Carries the offending singular value or eigenvalue.
class RankError : public Error {
public:
    RankError(const std::string& message, double value) : Error(message), value_(value) {}
    double value() const noexcept { return value_; }

private:
    double value_;
};

/// Dense factorisation did not converge.
class NumericError : public Error {
public:
    using Error::Error;
};

/// The model produces no usable signal (e.g. a zero probability or all-zero PMI).
class DegenerateModel : public Error {
public:
    using Error::Error;
};

/// A zero-pattern count is zero, so a PMI entry is undefined at this sample size.
class InsufficientData : public Error {
public:
    InsufficientData(const std::string& message, std::vector<int> indices)
        : Error(message), indices_(std::move(indices)) {}
    const std::vector<int>& indices() const noexcept { return indices_; }

private:
    std::vector<int> indices_;
};

/// I/O and file-format failures.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace noisyor
