#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lastiter {

/// Bad argument to a builder or evaluator (nonpositive D, lo > hi, ...).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An instance or schedule could not be built from the given inputs.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A descent run produced a non-finite value or subgradient.
class NumericFault : public std::runtime_error {
 public:
  NumericFault(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace lastiter
