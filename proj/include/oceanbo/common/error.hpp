#pragma once

#include <stdexcept>
#include <string>

namespace oceanbo {

// Invalid settings or inputs that a caller could have checked up front.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tensor or file contents whose dimensions do not agree.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent files on disk.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace oceanbo
