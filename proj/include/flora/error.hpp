#pragma once

#include <stdexcept>
#include <string>

namespace flora {

// Bad input: configs, spaces, points, datasets. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Failure while running a valid experiment (numerics, IO). Exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace flora
