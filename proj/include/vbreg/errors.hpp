#pragma once

#include <stdexcept>
#include <string>

namespace vbreg {

// Exception categories map one-to-one onto CLI exit codes.

/// Bad configuration or argument (exit code 1).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate geometry, non-finite values, failed solves (exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vbreg
