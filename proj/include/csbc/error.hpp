#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csbc {

// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters or mismatched configuration (thresholds, component counts,
// missing calibration maps or models).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Invalid in-memory input: degenerate boxes, non-finite values, dimension mismatch.
class InputError : public Error {
public:
    using Error::Error;
};

// Malformed line in a text record file.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& detail, const std::string& source = {})
        : Error((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ": " + detail),
          line_(line),
          detail_(detail) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

// Structurally invalid container (model files, precomputed feature tables).
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// A target or distribution without spread (constant labels, constant scores).
class DegenerateError : public Error {
public:
    using Error::Error;
};

class OutOfBoundsError : public Error {
public:
    using Error::Error;
};

// Synthetic scene could not be laid out within the overlap budget.
class PlacementError : public Error {
public:
    using Error::Error;
};

}  // namespace csbc
