#pragma once

#include <stdexcept>
#include <string>

namespace boclab {

// Process exit codes used by the CLI; each exception class maps to one.
enum class ExitCode : int {
  kSuccess = 0,
  kNumerical = 1,
  kInput = 2,
  kInvariant = 3,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

// Bad arguments: dimension mismatch, out-of-range threshold, malformed file.
class InputError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kInput; }
};

// Non-convergence, singular matrices, divergence.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double achieved_bound = -1.0)
      : Error(what), achieved_bound_(achieved_bound) {}
  ExitCode exit_code() const noexcept override { return ExitCode::kNumerical; }
  // Error bound reached before giving up, or negative when not applicable.
  double achieved_bound() const noexcept { return achieved_bound_; }

 private:
  double achieved_bound_;
};

class InvariantError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kInvariant; }
};

}  // namespace boclab
