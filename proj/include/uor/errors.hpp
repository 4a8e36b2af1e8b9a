#pragma once

#include <stdexcept>
#include <string>

namespace uor {

// Error taxonomy mapped to CLI exit codes: validation -> 2, numerical -> 3,
// capacity -> 4.

// Bad arguments, malformed configs, inconsistent divisions.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf propagation, solver residual failures, degenerate truncation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Search or data volume beyond a hard limit.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace uor
