#include "cvgrad/barrier.hpp"

#include <cmath>
#include <limits>

#include "cvgrad/errors.hpp"

namespace cvgrad {

namespace {

constexpr double kRefineSwitchGap = 1e-6;  // barrier gap at which PD refinement takes over
constexpr double kRegularization = 1e-10;
constexpr double kRcondFloor = 1e-14;

struct KktState {
  Vector residual;  // [grad f0 + G'lambda ; lambda .* (G theta - h)]
  double inf_norm = 0;
};

KktState kkt_state(const SmoothConvexProblem& p, const Vector& theta, const Vector& lambda) {
  const Index n = theta.size();
  const Index c = p.G.rows();
  KktState st;
  st.residual.resize(n + c);
  Vector stat = p.grad(theta);
  if (c > 0) stat += p.G.transpose() * lambda;
  st.residual.head(n) = stat;
  if (c > 0) st.residual.tail(c) = lambda.cwiseProduct(p.G * theta - p.h);
  st.inf_norm = st.residual.cwiseAbs().maxCoeff();
  return st;
}

Matrix kkt_jacobian(const SmoothConvexProblem& p, const Vector& theta, const Vector& lambda) {
  const Index n = theta.size();
  const Index c = p.G.rows();
  Matrix J = Matrix::Zero(n + c, n + c);
  J.topLeftCorner(n, n) = p.hess(theta);
  if (c > 0) {
    J.topRightCorner(n, c) = p.G.transpose();
    J.bottomLeftCorner(c, n) = lambda.asDiagonal() * p.G;
    J.bottomRightCorner(c, c) = (p.G * theta - p.h).asDiagonal();
  }
  return J;
}

}  // namespace

BarrierResult barrier_solve_diff(const SmoothConvexProblem& p, const BarrierOptions& opts) {
  if (!p.value || !p.grad || !p.hess) throw ArgumentError("barrier: objective callbacks required");
  const Index n = p.theta0.size();
  const Index c = p.G.rows();
  if (c > 0 && (p.G.cols() != n || p.h.size() != c))
    throw ArgumentError("barrier: constraint dimensions inconsistent");

  Vector theta = p.theta0;
  if (c > 0 && ((p.h - p.G * theta).array() <= 0.0).any())
    throw ArgumentError("barrier: start point is not strictly feasible");

  int newton_steps = 0;
  auto spend_step = [&]() {
    if (++newton_steps > opts.max_newton_per_stage * 32)
      throw ConvergenceError("barrier: Newton budget exhausted", -1.0);
  };

  // Centering stage. With no inequalities this is one plain Newton solve.
  double t = opts.t0;
  while (true) {
    // minimize t f0(theta) - sum log(h - G theta)
    for (int it = 0; it < opts.max_newton_per_stage; ++it) {
      spend_step();
      Vector s = c > 0 ? Vector(p.h - p.G * theta) : Vector();
      Vector g = t * p.grad(theta);
      Matrix H = t * p.hess(theta);
      if (c > 0) {
        const Vector inv_s = s.cwiseInverse();
        g += p.G.transpose() * inv_s;
        H += p.G.transpose() * inv_s.cwiseAbs2().asDiagonal() * p.G;
      }
      Eigen::LLT<Matrix> llt(H);
      if (llt.info() != Eigen::Success)
        throw ConvergenceError("barrier: centering Hessian not positive definite",
                               g.cwiseAbs().maxCoeff());
      const Vector dir = llt.solve(-g);
      const double decrement = -g.dot(dir);  // lambda^2 of the Newton step
      if (decrement / 2.0 <= 1e-12) break;

      double step = 1.0;
      if (c > 0) {
        const Vector gd = p.G * dir;
        for (Index i = 0; i < c; ++i)
          if (gd[i] > 0) step = std::min(step, 0.99 * s[i] / gd[i]);
      }
      auto barrier_value = [&](const Vector& x) {
        double val = t * p.value(x);
        if (c > 0) {
          const Vector sx = p.h - p.G * x;
          if ((sx.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
          val -= sx.array().log().sum();
        }
        return val;
      };
      const double f0 = barrier_value(theta);
      while (barrier_value(theta + step * dir) > f0 - 1e-4 * step * decrement) {
        step *= 0.5;
        if (step < 1e-14)
          throw ConvergenceError("barrier: centering line search failed",
                                 g.cwiseAbs().maxCoeff());
      }
      theta += step * dir;
    }
    if (c == 0 || static_cast<double>(c) / t <= kRefineSwitchGap) break;
    t *= opts.barrier_mu;
  }

  Vector lambda = c > 0 ? Vector((t * (p.h - p.G * theta)).cwiseInverse()) : Vector();

  // Primal-dual Newton refinement on the KKT residual map.
  KktState st = kkt_state(p, theta, lambda);
  for (int it = 0; it < opts.max_refine && st.inf_norm > opts.tolerance; ++it) {
    spend_step();
    Matrix J = kkt_jacobian(p, theta, lambda);
    J.diagonal().array() += kRegularization;
    Eigen::PartialPivLU<Matrix> lu(J);
    Vector dz = lu.solve(-st.residual);
    const Vector dtheta = dz.head(n);
    const Vector dlambda = c > 0 ? Vector(dz.tail(c)) : Vector();

    double step = 1.0;
    if (c > 0) {
      const Vector s = p.h - p.G * theta;
      const Vector gd = p.G * dtheta;
      for (Index i = 0; i < c; ++i) {
        if (gd[i] > 0) step = std::min(step, 0.99 * s[i] / gd[i]);
        if (dlambda[i] < 0) step = std::min(step, -0.99 * lambda[i] / dlambda[i]);
      }
    }
    while (true) {
      Vector theta_try = theta + step * dtheta;
      Vector lambda_try = c > 0 ? Vector(lambda + step * dlambda) : lambda;
      KktState st_try = kkt_state(p, theta_try, lambda_try);
      if (st_try.inf_norm <= (1.0 - 1e-4 * step) * st.inf_norm || step < 1e-10) {
        theta = std::move(theta_try);
        lambda = std::move(lambda_try);
        st = std::move(st_try);
        break;
      }
      step *= 0.5;
    }
  }
  if (st.inf_norm > opts.tolerance)
    throw ConvergenceError("barrier: KKT refinement did not reach tolerance", st.inf_norm);

  BarrierResult out;
  out.theta = theta;
  out.lambda = lambda;
  out.kkt_residual = st.inf_norm;
  out.objective = p.value(theta);
  out.newton_steps = newton_steps;

  // Implicit differentiation through the refined KKT point.
  const Index d = p.param_dim;
  if (d > 0) {
    Matrix J = kkt_jacobian(p, theta, lambda);
    J.diagonal().array() += kRegularization;
    Eigen::PartialPivLU<Matrix> lu(J);
    if (lu.rcond() < kRcondFloor) {
      Eigen::JacobiSVD<Matrix> svd(J);
      throw DifferentiabilityError("barrier: KKT system numerically singular",
                                   svd.singularValues().tail(1)(0));
    }
    Matrix rhs = Matrix::Zero(n + c, d);
    if (p.cross) rhs.topRows(n) = p.cross(theta);
    if (c > 0 && p.constraint_cross)
      rhs.bottomRows(c) = lambda.asDiagonal() * p.constraint_cross(theta);
    out.jac = (-lu.solve(rhs)).topRows(n);
  } else {
    out.jac.resize(n, 0);
  }
  return out;
}

}  // namespace cvgrad
