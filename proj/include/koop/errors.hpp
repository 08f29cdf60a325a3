#pragma once

#include <stdexcept>
#include <string>

namespace koop {

/// Base class for all library failures.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or malformed input description (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

/// Violated numerical precondition or failed numerical computation (CLI exit code 3).
struct NumericError : Error {
    using Error::Error;
};

/// File-system and parsing failures (CLI exit code 4).
struct IoError : Error {
    using Error::Error;
};

}  // namespace koop
