#pragma once

#include <stdexcept>
#include <string>

namespace maltml {

// Bad shapes, mismatched layouts, invalid graph requests.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Invalid configuration or CLI usage (exit code 1).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite values or failed numerical checks (exit code 2).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace maltml
