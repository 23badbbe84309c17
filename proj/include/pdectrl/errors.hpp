#pragma once

#include <stdexcept>
#include <string>

namespace pdectrl {

// Error taxonomy maps onto CLI exit codes: ConfigError -> 2, everything
// numerical or environmental -> 1 (see tools/pdectrl.cpp).

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct EnvironmentFault : std::runtime_error {
    explicit EnvironmentFault(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pdectrl
