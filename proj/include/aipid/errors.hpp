#pragma once

#include <stdexcept>
#include <string>

namespace aipid {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DepthMismatch : public Error {
public:
    DepthMismatch(std::size_t expected, std::size_t got)
        : Error("depth mismatch: expected " + std::to_string(expected) + ", got " + std::to_string(got)) {}
};

class InsufficientWindow : public Error {
public:
    InsufficientWindow(std::size_t have, std::size_t need)
        : Error("insufficient window: " + std::to_string(have) + " samples, need " + std::to_string(need)) {}
};

class DepthTooSmall : public Error {
public:
    using Error::Error;
};

/// A non-finite value appeared in the controller state during stepping.
class IntegrationDiverged : public Error {
public:
    IntegrationDiverged(double t, std::string field)
        : Error("integration diverged at t=" + std::to_string(t) + " in " + field), t_(t), field_(std::move(field)) {}

    double time() const noexcept { return t_; }
    const std::string &field() const noexcept { return field_; }

private:
    double t_;
    std::string field_;
};

class PlantDiverged : public Error {
public:
    explicit PlantDiverged(double t) : Error("plant diverged at t=" + std::to_string(t)), t_(t) {}

    double time() const noexcept { return t_; }

private:
    double t_;
};

class EmptyWindow : public Error {
public:
    using Error::Error;
};

class UnknownParamPath : public Error {
public:
    explicit UnknownParamPath(const std::string &path) : Error("unknown parameter path: " + path), path_(path) {}

    const std::string &path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Malformed JSON. Line and column are 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string &what)
        : Error("parse error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Well-formed input that violates a constraint; field() is the dotted path.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string &constraint)
        : Error("invalid " + field + ": " + constraint), field_(std::move(field)) {}

    const std::string &field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace aipid
