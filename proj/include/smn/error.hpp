#pragma once

#include <stdexcept>
#include <string>

namespace smn {

enum class ErrorKind {
    io,          // missing or unreadable file
    format,      // malformed input record
    validation,  // well-formed input violating a contract
    shape,       // tensor shape mismatch
    numeric,     // NaN / Inf detected
    config,      // invalid run configuration
};

const char* to_string(ErrorKind kind);

/// Base exception for every failure the engine reports. The kind maps to a
/// CLI exit code and to the `error` field of the one-line JSON diagnostic.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error(ErrorKind::io, message) {}
};

/// Malformed input; `line` is 1-based, 0 when not line-oriented.
class FormatError : public Error {
public:
    FormatError(const std::string& message, std::size_t line = 0)
        : Error(ErrorKind::format,
                line ? "line " + std::to_string(line) + ": " + message : message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message)
        : Error(ErrorKind::validation, message) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& message) : Error(ErrorKind::shape, message) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& message) : Error(ErrorKind::numeric, message) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error(ErrorKind::config, message) {}
};

}  // namespace smn
