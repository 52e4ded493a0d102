#include "cvgrad/newton.hpp"

#include <cmath>

#include "cvgrad/errors.hpp"

namespace cvgrad {

NewtonResult newton_unconstrained_diff(const GradFn& grad, const HessFn& hess,
                                       const CrossFn& cross, Vector theta0,
                                       const NewtonOptions& opts) {
  Vector theta = std::move(theta0);
  Vector g = grad(theta);
  double gnorm = g.size() > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
  int iter = 0;

  while (gnorm > opts.grad_tolerance) {
    if (iter >= opts.max_iterations)
      throw ConvergenceError("newton: iteration limit reached", gnorm);

    Matrix H = hess(theta);
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success)
      throw ConvergenceError("newton: Hessian is not positive definite", gnorm);
    Vector dir = llt.solve(-g);

    // Armijo on the merit 1/2|grad|^2; along the Newton direction the
    // directional derivative of the merit is -g'g.
    const double merit0 = 0.5 * g.squaredNorm();
    const double slope = -g.squaredNorm();
    double t = 1.0;
    Vector g_next;
    while (true) {
      g_next = grad(theta + t * dir);
      if (0.5 * g_next.squaredNorm() <= merit0 + opts.armijo_c * t * slope) break;
      t *= 0.5;
      if (t < 1e-12)
        throw ConvergenceError("newton: line search failed", gnorm);
    }
    theta += t * dir;
    g = std::move(g_next);
    gnorm = g.cwiseAbs().maxCoeff();
    ++iter;
  }

  NewtonResult out;
  out.theta = std::move(theta);
  out.grad_norm = gnorm;
  out.iterations = iter;

  Matrix Hstar = hess(out.theta);
  Eigen::LLT<Matrix> llt(Hstar);
  if (llt.info() != Eigen::Success)
    throw ConvergenceError("newton: Hessian not positive definite at optimum", gnorm);
  Matrix C = cross(out.theta);
  out.jac = C.size() > 0 ? Matrix(-llt.solve(C)) : Matrix(out.theta.size(), 0);
  return out;
}

}  // namespace cvgrad
