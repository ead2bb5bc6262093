#pragma once

#include <stdexcept>
#include <string>

namespace rotsim {

// Bad input files, unknown keys, out-of-range settings. CLI exit code 1.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Violations detected while running: negative populations, degenerate fits,
// truncation failures. CLI exit code 2.
class PhysicsError : public std::runtime_error {
  public:
    explicit PhysicsError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace rotsim
