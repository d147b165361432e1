#pragma once

#include <stdexcept>
#include <string>

namespace tr2c {

// Bad user input: shapes, files, partitions, flag values. CLI exit code 2.
struct InvalidInputError : std::runtime_error {
    explicit InvalidInputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or inconsistent configuration. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or failed factorizations at run time. CLI exit code 1.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tr2c
