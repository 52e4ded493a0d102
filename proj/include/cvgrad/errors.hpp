#pragma once

#include <stdexcept>
#include <string>

namespace cvgrad {

/// Invalid sizes, out-of-range hyperparameters, malformed inputs.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The problem itself is ill-posed (e.g. quadratic term not positive definite).
class ProblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver stopped before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// The KKT system is too ill-conditioned to differentiate through.
class DifferentiabilityError : public std::runtime_error {
 public:
  DifferentiabilityError(const std::string& what, double smallest_singular_value)
      : std::runtime_error(what), smallest_singular_value_(smallest_singular_value) {}
  double smallest_singular_value() const { return smallest_singular_value_; }

 private:
  double smallest_singular_value_;
};

/// A cross-validation fold failed; carries the fold index (fail-fast, no fold dropping).
class FoldError : public std::runtime_error {
 public:
  FoldError(int fold_index, const std::string& what)
      : std::runtime_error("fold " + std::to_string(fold_index) + ": " + what),
        fold_index_(fold_index) {}
  int fold_index() const { return fold_index_; }

 private:
  int fold_index_;
};

}  // namespace cvgrad
