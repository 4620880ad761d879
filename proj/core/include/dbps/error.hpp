#pragma once

#include <stdexcept>
#include <string>

namespace dbps {

/// Base class of all errors thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (bad L, odd QAM order, negative rate, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Mismatched lengths or matrix shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf in a computation, diverged training, empty loss selection.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace dbps
