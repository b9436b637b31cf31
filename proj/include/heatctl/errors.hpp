#pragma once

#include <stdexcept>
#include <string>

namespace heatctl {

/// Violated precondition on arguments passed by the caller.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Degenerate geometry encountered while assembling element matrices.
class AssemblyError : public std::runtime_error {
 public:
  AssemblyError(const std::string& what, long element)
      : std::runtime_error(what), element_(element) {}
  long element() const { return element_; }

 private:
  long element_;
};

/// A linear or eigenvalue solve did not reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, double estimate = 0.0)
      : std::runtime_error(what), residual_(residual), estimate_(estimate) {}

  double residual() const { return residual_; }
  /// Last Rayleigh quotient for eigen-iterations, 0 otherwise.
  double estimate() const { return estimate_; }

 private:
  double residual_;
  double estimate_;
};

}  // namespace heatctl
