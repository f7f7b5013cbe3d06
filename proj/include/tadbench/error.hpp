#pragma once

#include <stdexcept>
#include <string>

namespace tad {

// Base error for this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration, malformed input file, missing path. CLI exit code 2.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Non-finite values, shape violations, failed numeric preconditions. CLI exit code 3.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace tad
