#pragma once

#include <stdexcept>
#include <string>

namespace sdc {

// Contract violations: bad arguments, malformed files, config errors.
// The CLI maps these to exit code 1.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failures. The CLI maps these to exit code 2.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sdc
