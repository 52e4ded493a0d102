#include "cvgrad/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvgrad/errors.hpp"

namespace cvgrad {

namespace {

constexpr double kJacobianRegularization = 1e-10;
constexpr double kRcondFloor = 1e-14;

void check_dims(bool ok, const char* what) {
  if (!ok) throw ArgumentError(std::string("qp: inconsistent dimensions: ") + what);
}

}  // namespace

void QpProblem::validate() const {
  check_dims(Q.rows() == Q.cols(), "Q square");
  check_dims(q.size() == Q.rows(), "q");
  if (G.size() > 0 || h.size() > 0) {
    check_dims(G.cols() == Q.rows(), "G cols");
    check_dims(h.size() == G.rows(), "h");
  }
  if (A.size() > 0 || b.size() > 0) {
    check_dims(A.cols() == Q.rows(), "A cols");
    check_dims(b.size() == A.rows(), "b");
  }
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ProblemError("qp: quadratic term must be symmetric");
}

double qp_objective(const QpProblem& p, const Vector& v) {
  return 0.5 * v.dot(p.Q * v) + p.q.dot(v);
}

double kkt_residual_inf(const QpProblem& p, const Vector& v, const Vector& lambda,
                        const Vector& nu) {
  Vector stat = p.Q * v + p.q;
  if (p.num_ineq() > 0) stat += p.G.transpose() * lambda;
  if (p.num_eq() > 0) stat += p.A.transpose() * nu;
  double res = stat.cwiseAbs().maxCoeff();
  if (p.num_ineq() > 0) {
    const Vector f = p.G * v - p.h;  // <= 0 at feasibility
    res = std::max(res, lambda.cwiseProduct(f).cwiseAbs().maxCoeff());
    res = std::max(res, f.cwiseMax(0.0).maxCoeff());
    res = std::max(res, (-lambda).cwiseMax(0.0).maxCoeff());
  }
  if (p.num_eq() > 0) res = std::max(res, (p.A * v - p.b).cwiseAbs().maxCoeff());
  return res;
}

namespace {

// Equality-constrained (or unconstrained) solve: [[Q, A'],[A, 0]] [v; nu] = [-q; b].
void solve_eq_qp(const QpProblem& p, Vector& v, Vector& nu) {
  const Index m = p.num_vars();
  const Index e = p.num_eq();
  if (e == 0) {
    Eigen::LLT<Matrix> llt(p.Q);
    if (llt.info() != Eigen::Success)
      throw ProblemError("qp: quadratic term is not positive definite");
    v = llt.solve(-p.q);
    nu.resize(0);
    return;
  }
  Matrix K = Matrix::Zero(m + e, m + e);
  K.topLeftCorner(m, m) = p.Q;
  K.topRightCorner(m, e) = p.A.transpose();
  K.bottomLeftCorner(e, m) = p.A;
  Vector rhs(m + e);
  rhs.head(m) = -p.q;
  rhs.tail(e) = p.b;
  Eigen::PartialPivLU<Matrix> lu(K);
  Vector sol = lu.solve(rhs);
  v = sol.head(m);
  nu = sol.tail(e);
}

// Post-convergence refinement: re-solve the equality system of the apparent
// active set. Accepted only when it is solvable, keeps signs, and does not
// increase the KKT residual; otherwise the interior-point iterate stands.
void polish(const QpProblem& p, Vector& v, Vector& lambda, Vector& nu) {
  const Index m = p.num_vars();
  const Index c = p.num_ineq();
  const Index e = p.num_eq();
  std::vector<Index> active;
  const Vector slack = p.h - p.G * v;
  for (Index i = 0; i < c; ++i)
    if (lambda[i] > std::abs(slack[i])) active.push_back(i);
  const Index a = static_cast<Index>(active.size());

  Matrix K = Matrix::Zero(m + a + e, m + a + e);
  K.topLeftCorner(m, m) = p.Q;
  Vector rhs(m + a + e);
  rhs.head(m) = -p.q;
  for (Index j = 0; j < a; ++j) {
    K.block(0, m + j, m, 1) = p.G.row(active[static_cast<std::size_t>(j)]).transpose();
    K.block(m + j, 0, 1, m) = p.G.row(active[static_cast<std::size_t>(j)]);
    rhs[m + j] = p.h[active[static_cast<std::size_t>(j)]];
  }
  if (e > 0) {
    K.block(0, m + a, m, e) = p.A.transpose();
    K.block(m + a, 0, e, m) = p.A;
    rhs.tail(e) = p.b;
  }
  Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible()) return;
  const Vector sol = lu.solve(rhs);
  const Vector v_new = sol.head(m);
  Vector lambda_new = Vector::Zero(c);
  for (Index j = 0; j < a; ++j) {
    if (sol[m + j] < 0) return;  // wrong active set guess
    lambda_new[active[static_cast<std::size_t>(j)]] = sol[m + j];
  }
  const Vector nu_new = e > 0 ? Vector(sol.tail(e)) : Vector();
  if (c > 0 && ((p.G * v_new - p.h).array() > 1e-9).any()) return;
  if (kkt_residual_inf(p, v_new, lambda_new, nu_new) > kkt_residual_inf(p, v, lambda, nu)) return;
  v = v_new;
  lambda = lambda_new;
  nu = nu_new;
}

double dual_objective(const QpProblem& p, const Eigen::LLT<Matrix>& lltQ, const Vector& lambda,
                      const Vector& nu) {
  Vector u = p.q;
  if (p.num_ineq() > 0) u += p.G.transpose() * lambda;
  if (p.num_eq() > 0) u += p.A.transpose() * nu;
  const Vector w = lltQ.solve(u);
  double val = -0.5 * u.dot(w);
  if (p.num_ineq() > 0) val -= lambda.dot(p.h);
  if (p.num_eq() > 0) val -= nu.dot(p.b);
  return val;
}

}  // namespace

KktSolution qp_solve(const QpProblem& p, const QpSolveOptions& opts) {
  p.validate();
  const Index m = p.num_vars();
  const Index c = p.num_ineq();
  const Index e = p.num_eq();

  Eigen::LLT<Matrix> lltQ(p.Q);
  if (lltQ.info() != Eigen::Success)
    throw ProblemError("qp: quadratic term is not positive definite");

  KktSolution sol;

  if (c == 0) {
    solve_eq_qp(p, sol.v_star, sol.nu_star);
    sol.lambda_star.resize(0);
    sol.kkt_residual = kkt_residual_inf(p, sol.v_star, sol.lambda_star, sol.nu_star);
    sol.objective = qp_objective(p, sol.v_star);
    sol.duality_gap = 0.0;
    return sol;
  }

  // Interior start from a ridged solve; the plain Q^{-1} start explodes when
  // Q is nearly singular (e.g. tiny PD-repair diagonals).
  Vector v(m), nu(e);
  {
    const Matrix Qr = p.Q + Matrix::Identity(m, m);
    if (e == 0) {
      v = Qr.llt().solve(-p.q);
    } else {
      Matrix K = Matrix::Zero(m + e, m + e);
      K.topLeftCorner(m, m) = Qr;
      K.topRightCorner(m, e) = p.A.transpose();
      K.bottomLeftCorner(e, m) = p.A;
      Vector rhs(m + e);
      rhs.head(m) = -p.q;
      rhs.tail(e) = p.b;
      const Vector sol = Eigen::PartialPivLU<Matrix>(K).solve(rhs);
      v = sol.head(m);
      nu = sol.tail(e);
    }
  }
  Vector s = (p.h - p.G * v).cwiseMax(1.0);
  Vector lambda = Vector::Ones(c);

  Matrix H(m, m);
  Matrix K;           // augmented system when equalities present
  Vector rhs_v(m);
  Vector dv(m), ds(c), dlam(c), dnu(e);

  const double cd = static_cast<double>(c);
  double last_residual = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (!v.allFinite() || !s.allFinite() || !lambda.allFinite())
      throw ConvergenceError("qp: iterates diverged (problem may be infeasible)", last_residual);
    Vector r_d = p.Q * v + p.q + p.G.transpose() * lambda;
    if (e > 0) r_d += p.A.transpose() * nu;
    Vector r_p = p.G * v + s - p.h;
    Vector r_e = e > 0 ? Vector(p.A * v - p.b) : Vector();
    const double mu = s.dot(lambda) / cd;

    if (opts.record_trace) {
      double pres = (p.G * v - p.h).cwiseMax(0.0).maxCoeff();
      if (e > 0) pres = std::max(pres, (p.A * v - p.b).cwiseAbs().maxCoeff());
      sol.trace.push_back(
          QpIterate{qp_objective(p, v), dual_objective(p, lltQ, lambda, nu), mu, pres});
    }

    // Convergence in the residual form of g (actual slack h - Gv).
    const double res = kkt_residual_inf(p, v, lambda, nu);
    if (std::isfinite(res)) last_residual = res;
    const double obj = qp_objective(p, v);
    const double gap = std::abs(lambda.dot(p.h - p.G * v));
    if (res <= opts.tolerance && gap <= opts.tolerance * (1.0 + std::abs(obj))) {
      sol.v_star = v;
      sol.lambda_star = lambda;
      sol.nu_star = nu;
      polish(p, sol.v_star, sol.lambda_star, sol.nu_star);
      sol.kkt_residual = kkt_residual_inf(p, sol.v_star, sol.lambda_star, sol.nu_star);
      sol.objective = qp_objective(p, sol.v_star);
      sol.duality_gap = std::abs(sol.lambda_star.dot(p.h - p.G * sol.v_star));
      sol.iterations = iter;
      return sol;
    }

    const Vector w = lambda.cwiseQuotient(s);
    H = p.Q + p.G.transpose() * w.asDiagonal() * p.G;

    Eigen::LLT<Matrix> lltH;
    Eigen::PartialPivLU<Matrix> luH;
    bool use_lu_fallback = false;
    Eigen::PartialPivLU<Matrix> luK;
    if (e == 0) {
      lltH.compute(H);
      if (lltH.info() != Eigen::Success) {
        // Rounding can push the normal matrix past Cholesky near convergence.
        use_lu_fallback = true;
        luH.compute(H);
      }
    } else {
      K = Matrix::Zero(m + e, m + e);
      K.topLeftCorner(m, m) = H;
      K.topRightCorner(m, e) = p.A.transpose();
      K.bottomLeftCorner(e, m) = p.A;
      luK.compute(K);
    }

    auto solve_direction = [&](const Vector& r_c) {
      rhs_v = -r_d - p.G.transpose() * (lambda.cwiseProduct(r_p) - r_c).cwiseQuotient(s);
      if (e == 0) {
        if (use_lu_fallback)
          dv = luH.solve(rhs_v);
        else
          dv = lltH.solve(rhs_v);
      } else {
        Vector rhs(m + e);
        rhs.head(m) = rhs_v;
        rhs.tail(e) = -r_e;
        Vector d = luK.solve(rhs);
        dv = d.head(m);
        dnu = d.tail(e);
      }
      ds = -r_p - p.G * dv;
      dlam = (-r_c + lambda.cwiseProduct(r_p)).cwiseQuotient(s) + w.cwiseProduct(p.G * dv);
    };

    auto max_step = [&](const Vector& x, const Vector& dx) {
      double a = 1.0;
      for (Index i = 0; i < x.size(); ++i)
        if (dx[i] < 0) a = std::min(a, -x[i] / dx[i]);
      return a;
    };

    // Predictor (affine scaling).
    solve_direction(lambda.cwiseProduct(s));
    const double a_aff = std::min(max_step(s, ds), max_step(lambda, dlam));
    const double mu_aff = (s + a_aff * ds).dot(lambda + a_aff * dlam) / cd;
    const double sigma = std::pow(mu_aff / mu, 3.0);

    // Corrector with centering.
    Vector r_c = lambda.cwiseProduct(s) + dlam.cwiseProduct(ds) -
                 Vector::Constant(c, sigma * mu);
    solve_direction(r_c);

    if (!dv.allFinite() || !ds.allFinite() || !dlam.allFinite() || (e > 0 && !dnu.allFinite()))
      throw ConvergenceError("qp: numerical breakdown near the solution", last_residual);

    const double tau = std::max(0.99, 1.0 - mu);
    const double alpha = std::min(1.0, tau * std::min(max_step(s, ds), max_step(lambda, dlam)));

    v += alpha * dv;
    s += alpha * ds;
    lambda += alpha * dlam;
    if (e > 0) nu += alpha * dnu;
  }

  const double final_res = kkt_residual_inf(p, v, lambda, nu);
  throw ConvergenceError("qp: interior point did not reach tolerance",
                         std::isfinite(final_res) ? final_res : last_residual);
}

KktDirectionalSolver::KktDirectionalSolver(const QpProblem& p, const KktSolution& s)
    : m_(p.num_vars()), c_(p.num_ineq()), e_(p.num_eq()),
      v_(s.v_star), lambda_(s.lambda_star), nu_(s.nu_star) {
  p.validate();
  check_dims(v_.size() == m_ && lambda_.size() == c_ && nu_.size() == e_, "solution");

  // Active-set rounding: an interior-point solution carries O(tol/slack)
  // dual noise on clearly inactive constraints (and slack noise on clearly
  // active ones) that would otherwise leak into the derivative. Constraints
  // where one side dominates are snapped to exact complementarity.
  Vector f = c_ > 0 ? Vector(p.G * v_ - p.h) : Vector();
  if (c_ > 0) {
    const double lam_scale = std::max(lambda_.maxCoeff(), 1.0);
    const double slack_scale = std::max(f.cwiseAbs().maxCoeff(), 1.0);
    for (Index i = 0; i < c_; ++i) {
      const double slack = -f[i];
      if (lambda_[i] <= 1e-7 * lam_scale && slack >= 1e-5 * slack_scale) lambda_[i] = 0.0;
      if (slack <= 1e-7 * slack_scale && lambda_[i] >= 1e-5 * lam_scale) f[i] = 0.0;
    }
  }

  const Index dim = m_ + c_ + e_;
  Matrix J = Matrix::Zero(dim, dim);
  J.topLeftCorner(m_, m_) = p.Q;
  if (c_ > 0) {
    J.block(0, m_, m_, c_) = p.G.transpose();
    J.block(m_, 0, c_, m_) = lambda_.asDiagonal() * p.G;
    J.block(m_, m_, c_, c_) = f.asDiagonal();
  }
  if (e_ > 0) {
    J.block(0, m_ + c_, m_, e_) = p.A.transpose();
    J.block(m_ + c_, 0, e_, m_) = p.A;
  }
  J.diagonal().array() += kJacobianRegularization;

  lu_.compute(J);
  if (lu_.rcond() < kRcondFloor) {
    Eigen::JacobiSVD<Matrix> svd(J);
    const double sv_min = svd.singularValues().tail(1)(0);
    throw DifferentiabilityError(
        "qp: KKT system is numerically singular; solution not differentiable here", sv_min);
  }
}

Vector KktDirectionalSolver::directional(const QpPerturbation& d) const {
  Vector rhs = Vector::Zero(m_ + c_ + e_);
  if (d.dQ.size() > 0) {
    check_dims(d.dQ.rows() == m_ && d.dQ.cols() == m_, "dQ");
    rhs.head(m_) += d.dQ * v_;
  }
  if (d.dq.size() > 0) {
    check_dims(d.dq.size() == m_, "dq");
    rhs.head(m_) += d.dq;
  }
  if (d.dG.size() > 0) {
    check_dims(d.dG.rows() == c_ && d.dG.cols() == m_, "dG");
    rhs.head(m_) += d.dG.transpose() * lambda_;
    rhs.segment(m_, c_) += lambda_.cwiseProduct(d.dG * v_);
  }
  if (d.dh.size() > 0) {
    check_dims(d.dh.size() == c_, "dh");
    rhs.segment(m_, c_) -= lambda_.cwiseProduct(d.dh);
  }
  if (d.dA.size() > 0) {
    check_dims(d.dA.rows() == e_ && d.dA.cols() == m_, "dA");
    rhs.head(m_) += d.dA.transpose() * nu_;
    rhs.tail(e_) += d.dA * v_;
  }
  if (d.db.size() > 0) {
    check_dims(d.db.size() == e_, "db");
    rhs.tail(e_) -= d.db;
  }
  Vector dz = lu_.solve(-rhs);
  return dz.head(m_);
}

Vector qp_jacobian(const QpProblem& p, const KktSolution& s, const QpPerturbation& d) {
  return KktDirectionalSolver(p, s).directional(d);
}

}  // namespace cvgrad
