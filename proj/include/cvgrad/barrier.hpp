#pragma once

#include <functional>

#include "cvgrad/types.hpp"

namespace cvgrad {

// minimize f0(theta; alpha)  subject to  G theta <= h
// with f0 smooth and convex in theta. `cross` is d/d(alpha) of grad f0
// (n x d); `constraint_cross` is d/d(alpha) of (G theta - h) rows (c x d),
// for constraints whose data depends on alpha. Either may be null (zero).
struct SmoothConvexProblem {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
  std::function<Matrix(const Vector&)> hess;
  std::function<Matrix(const Vector&)> cross;
  std::function<Matrix(const Vector&)> constraint_cross;
  Index param_dim = 0;
  Matrix G;
  Vector h;
  Vector theta0;  // strictly feasible start, required
};

struct BarrierOptions {
  double tolerance = 1e-9;        // target KKT residual (inf-norm)
  double barrier_mu = 20.0;       // outer multiplier on t
  double t0 = 1.0;
  int max_newton_per_stage = 200;
  int max_refine = 40;
};

struct BarrierResult {
  Vector theta;
  Vector lambda;
  Matrix jac;  // n x param_dim
  double kkt_residual = 0;
  double objective = 0;
  int newton_steps = 0;
};

// Log-barrier path following to a loose duality gap, then primal-dual Newton
// refinement of the KKT residual map
//   g(theta, lambda) = [ grad f0 + G'lambda ; diag(lambda)(G theta - h) ]
// down to `tolerance`. The Jacobian of the optimum w.r.t. alpha solves the
// same linearized KKT system as QP differentiation.
BarrierResult barrier_solve_diff(const SmoothConvexProblem& p, const BarrierOptions& opts = {});

}  // namespace cvgrad
