#pragma once

#include <stdexcept>
#include <string>

namespace beamsim {

/// Invalid configuration or malformed input. The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// I/O or other runtime failure. The CLI maps this to exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace beamsim
