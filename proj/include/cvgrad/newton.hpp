#pragma once

#include <functional>

#include "cvgrad/types.hpp"

namespace cvgrad {

using GradFn = std::function<Vector(const Vector&)>;
using HessFn = std::function<Matrix(const Vector&)>;
// d/d(alpha) of the gradient, evaluated at theta: m x k.
using CrossFn = std::function<Matrix(const Vector&)>;

struct NewtonOptions {
  double grad_tolerance = 1e-10;  // inf-norm
  int max_iterations = 100;
  double armijo_c = 1e-4;
};

struct NewtonResult {
  Vector theta;
  Matrix jac;  // m x k, solves hess(theta) * jac = -cross(theta)
  double grad_norm = 0;
  int iterations = 0;
};

// Minimizes a smooth convex function given by its gradient and Hessian,
// then differentiates the optimum with respect to parameters via the
// implicit function theorem. Backtracking (Armijo on 1/2|grad|^2, halving)
// guards each Newton step. Throws ConvergenceError on a non-PD Hessian or
// a failed line search / iteration limit.
NewtonResult newton_unconstrained_diff(const GradFn& grad, const HessFn& hess,
                                       const CrossFn& cross, Vector theta0,
                                       const NewtonOptions& opts = {});

}  // namespace cvgrad
