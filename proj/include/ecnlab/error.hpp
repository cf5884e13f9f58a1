#pragma once

#include <stdexcept>
#include <string>

namespace ecnlab {

// Bad configuration, bad CLI arguments, malformed input files. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures while executing an otherwise valid configuration. Maps to exit code 2.
class RunError : public std::runtime_error {
 public:
  explicit RunError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ecnlab
