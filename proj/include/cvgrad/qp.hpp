#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cvgrad/types.hpp"

namespace cvgrad {

// minimize   1/2 v'Qv + q'v
// subject to G v <= h          (c rows, may be empty)
//            A v  = b          (e rows, may be empty)
// Q must be symmetric positive definite (checked by Cholesky).
struct QpProblem {
  Matrix Q;
  Vector q;
  Matrix G;
  Vector h;
  Matrix A;
  Vector b;

  Index num_vars() const { return Q.rows(); }
  Index num_ineq() const { return G.rows(); }
  Index num_eq() const { return A.rows(); }
  void validate() const;
};

struct QpIterate {
  double primal_objective;
  double dual_objective;
  double mu;               // complementarity measure s'lambda / c
  double primal_residual;  // inf-norm feasibility violation of the iterate
};

struct KktSolution {
  Vector v_star;
  Vector lambda_star;  // inequality duals, >= 0
  Vector nu_star;      // equality duals
  double kkt_residual = 0;  // inf-norm over stationarity/complementarity/feasibility
  double objective = 0;
  double duality_gap = 0;
  int iterations = 0;
  std::vector<QpIterate> trace;  // filled when QpSolveOptions::record_trace
};

struct QpSolveOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
  bool record_trace = false;
};

// Dense primal-dual interior-point method with Mehrotra predictor-corrector.
// Throws ProblemError (non-PD Q), ConvergenceError (iteration limit).
KktSolution qp_solve(const QpProblem& p, const QpSolveOptions& opts = {});

// A direction in problem-data space; empty members mean zero.
struct QpPerturbation {
  Matrix dQ;
  Vector dq;
  Matrix dG;
  Vector dh;
  Matrix dA;
  Vector db;
};

// Differentiates the optimal primal point through the KKT conditions:
// solves J dz = -(d g / d param) . dparam with J the Jacobian of
//   g(v, lambda, nu) = [ Qv + q + G'lambda + A'nu ;
//                        diag(lambda) (Gv - h)    ;
//                        Av - b                   ]
// at the solution, and returns the primal block of dz. The factorization is
// reused across directions. J gets a 1e-10 diagonal bias before factorizing;
// if the system is still numerically singular a DifferentiabilityError is
// raised carrying the smallest singular value.
class KktDirectionalSolver {
 public:
  KktDirectionalSolver(const QpProblem& p, const KktSolution& s);
  Vector directional(const QpPerturbation& d) const;

 private:
  Index m_, c_, e_;
  Vector v_, lambda_, nu_;
  Eigen::PartialPivLU<Matrix> lu_;
};

// One-shot convenience wrapper around KktDirectionalSolver.
Vector qp_jacobian(const QpProblem& p, const KktSolution& s, const QpPerturbation& d);

double qp_objective(const QpProblem& p, const Vector& v);

// inf-norm of the KKT residual map g plus primal feasibility violations and
// negative-dual violations; zero exactly at a KKT point.
double kkt_residual_inf(const QpProblem& p, const Vector& v, const Vector& lambda,
                        const Vector& nu);

}  // namespace cvgrad
