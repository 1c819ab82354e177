#pragma once

#include <stdexcept>
#include <string>

namespace rtfa {

// Shape, rank or argument violations. Callers can treat these as usage errors.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or a numerical routine that could not produce a result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rtfa
