#pragma once

#include <stdexcept>
#include <string>

namespace fastge {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, out-of-range ids, inconsistent constraints.
class InputError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

/// The graph is disconnected where a connected graph is required.
class DisconnectedGraphError : public InputError {
 public:
  using InputError::InputError;
};

/// Numerical failure: non-convergence, ill-posed pencils, degenerate vectors.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : NumericalError(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

class IllPosedError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace fastge
