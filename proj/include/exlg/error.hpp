#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace exlg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A structural assumption on the network or the stepsize does not hold (exit code 3).
class AssumptionError : public Error {
 public:
  using Error::Error;
};

/// A chain produced non-finite or exploding iterates (exit code 4).
class DivergenceError : public Error {
 public:
  DivergenceError(std::int64_t iteration, double max_abs, const std::string& what)
      : Error(what), iteration_(iteration), max_abs_(max_abs) {}

  std::int64_t iteration() const { return iteration_; }
  double max_abs() const { return max_abs_; }

 private:
  std::int64_t iteration_;
  double max_abs_;
};

}  // namespace exlg
