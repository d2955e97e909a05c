#pragma once

#include <stdexcept>
#include <string>

namespace dfb {

/// Bad or inconsistent configuration (grid coupling, missing bounds, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown during a simulation or a solve; the message names the
/// offending path/step or feature block.
class SimulationError : public std::runtime_error {
 public:
  explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

/// A declared model bound was violated at runtime (e.g. volatility floor).
class ModelViolation : public std::runtime_error {
 public:
  explicit ModelViolation(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dfb
