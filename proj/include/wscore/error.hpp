#ifndef WSCORE_ERROR_HPP
#define WSCORE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace wscore {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad data, bad configuration, or an unidentifiable model. CLI exit code 1.
class InputError : public Error {
 public:
  using Error::Error;
};

/// An argument outside the mathematical domain of a kernel (p outside (0,1), |rho| >= 1, ...).
class DomainError : public InputError {
 public:
  using InputError::InputError;
};

/// A category that never occurs in the pooled data, or a covariate absorbed by the cutpoints.
class IdentifiabilityError : public InputError {
 public:
  using InputError::InputError;
};

/// Failure inside the numerics. CLI exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Non positive definite or singular matrices.
class MatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// An iterative solver ran out of iterations. Carries the last iterate.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate)
      : NumericalError(what), last_iterate_(std::move(last_iterate)) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

}  // namespace wscore

#endif  // WSCORE_ERROR_HPP
