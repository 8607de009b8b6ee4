#pragma once

#include <stdexcept>
#include <string>

namespace ifsb {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: unknown atoms, mismatched spaces,
/// non-positive densities, requests the inputs cannot support.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver ran out of iterations.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, long iterations)
      : Error(what + " (residual " + std::to_string(residual) + " after " +
              std::to_string(iterations) + " iterations)"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  long iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

/// A computed object violates one of its defining identities beyond
/// tolerance (Jacobian normalization, total mass, holonomy).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace ifsb
