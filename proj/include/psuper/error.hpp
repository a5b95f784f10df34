#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace psuper {

/// Base of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments or violated preconditions (p <= 2, r < 1, mismatched grids, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A Newton-type solve did not reach its residual tolerance.
class NonConvergence : public Error {
 public:
  NonConvergence(int iterations, double residual, const std::string& where = "solver")
      : Error(where + ": no convergence after " + std::to_string(iterations) +
              " iterations (residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Boundary data lies below the obstacle, so the admissible set is empty.
class Infeasible : public Error {
 public:
  using Error::Error;
};

class RootNotBracketed : public Error {
 public:
  using Error::Error;
};

/// Log-log fit with too few or insufficiently separated abscissae.
class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class InsufficientLevels : public Error {
 public:
  using Error::Error;
};

/// Greedy L1-Cauchy extraction could not find a next index.
class NoCauchySubsequence : public Error {
 public:
  using Error::Error;
};

}  // namespace psuper
