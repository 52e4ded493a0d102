#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cvgrad/barrier.hpp"
#include "cvgrad/errors.hpp"
#include "cvgrad/newton.hpp"
#include "cvgrad/qp.hpp"
#include "cvgrad/rng.hpp"
#include "oracles.hpp"

using namespace cvgrad;

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

TEST_CASE("quadratic objective solves in one Newton step with exact Jacobian") {
  Rng rng(1);
  const Matrix B = oracles::random_matrix(rng, 4, 4);
  const Matrix H = B.transpose() * B + Matrix::Identity(4, 4);
  const Vector c = oracles::random_matrix(rng, 4, 1).col(0);

  const auto res = newton_unconstrained_diff(
      [&](const Vector& t) { return Vector(H * t + c); },
      [&](const Vector&) { return H; },
      [&](const Vector&) { return Matrix(Matrix::Identity(4, 4)); }, Vector::Zero(4));

  const Vector want = -H.llt().solve(c);
  CHECK(oracles::rel_error_inf(res.theta, want) < 1e-10);
  CHECK(res.iterations <= 2);
  const Matrix jac_want = -H.inverse();
  CHECK((res.jac - jac_want).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("zero cross derivative gives a zero Jacobian") {
  const Matrix H = 2.0 * Matrix::Identity(3, 3);
  const auto res = newton_unconstrained_diff(
      [&](const Vector& t) { return Vector(H * t); }, [&](const Vector&) { return H; },
      [&](const Vector&) { return Matrix(Matrix::Zero(3, 2)); }, Vector::Ones(3));
  CHECK(res.jac.cwiseAbs().maxCoeff() == 0.0);
  CHECK(res.theta.cwiseAbs().maxCoeff() < 1e-10);
}

namespace {

// Example-1 style logistic objective with the hyperparameter baked into the
// callbacks; used to compare the Newton-path Jacobian to finite differences.
struct LogisticCallbacks {
  Matrix X;
  Vector y;
  double C;

  Vector grad(const Vector& theta) const {
    Vector w(y.size());
    for (Index i = 0; i < y.size(); ++i)
      w[i] = (sigmoid(y[i] * X.row(i).dot(theta)) - 1.0) * y[i];
    return theta + C * (X.transpose() * w);
  }
  Matrix hess(const Vector& theta) const {
    Vector d(y.size());
    for (Index i = 0; i < y.size(); ++i) {
      const double pi = sigmoid(y[i] * X.row(i).dot(theta));
      d[i] = pi * (1.0 - pi);
    }
    return Matrix::Identity(X.cols(), X.cols()) + C * (X.transpose() * d.asDiagonal() * X);
  }
  Matrix cross(const Vector& theta) const {
    Vector w(y.size());
    for (Index i = 0; i < y.size(); ++i)
      w[i] = (sigmoid(y[i] * X.row(i).dot(theta)) - 1.0) * y[i];
    return Matrix(X.transpose() * w);
  }
  Vector solve() const {
    return newton_unconstrained_diff(
               [this](const Vector& t) { return grad(t); },
               [this](const Vector& t) { return hess(t); },
               [this](const Vector&) { return Matrix(Matrix::Zero(X.cols(), 0)); },
               Vector::Zero(X.cols()))
        .theta;
  }
};

}  // namespace

TEST_CASE("logistic Jacobian w.r.t. C matches finite differences") {
  LogisticCallbacks cb;
  cb.X.resize(4, 2);
  cb.X << 1.0, 0.5, -0.3, 1.2, 0.8, -0.7, -1.1, -0.2;
  cb.y.resize(4);
  cb.y << 1, 1, -1, -1;
  cb.C = 10.0;

  const auto res = newton_unconstrained_diff(
      [&](const Vector& t) { return cb.grad(t); }, [&](const Vector& t) { return cb.hess(t); },
      [&](const Vector& t) { return cb.cross(t); }, Vector::Zero(2));
  CHECK(res.grad_norm <= 1e-10);

  const double dc = 1e-5 * cb.C;
  LogisticCallbacks up = cb, dn = cb;
  up.C += dc;
  dn.C -= dc;
  const Vector fd = (up.solve() - dn.solve()) / (2.0 * dc);
  CHECK(oracles::rel_error_inf(res.jac.col(0), fd) < 1e-4);
}

TEST_CASE("implicit-function identity holds at the optimum") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 2 + static_cast<Index>(rng.uniform_index(4));
    const Matrix B = oracles::random_matrix(rng, n, n);
    const Matrix H = B.transpose() * B + Matrix::Identity(n, n);
    const Vector c = oracles::random_matrix(rng, n, 1).col(0);
    const Matrix cross = oracles::random_matrix(rng, n, 3);
    const auto res = newton_unconstrained_diff(
        [&](const Vector& t) { return Vector(H * t + c); }, [&](const Vector&) { return H; },
        [&](const Vector&) { return cross; }, Vector::Zero(n));
    CHECK((H * res.jac + cross).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("newton rejects a non-PD Hessian") {
  CHECK_THROWS_AS(
      newton_unconstrained_diff([](const Vector& t) { return Vector(-t); },
                                [](const Vector&) { return Matrix(-Matrix::Identity(1, 1)); },
                                [](const Vector&) { return Matrix(Matrix::Zero(1, 0)); },
                                Vector::Ones(1)),
      ConvergenceError);
}

TEST_CASE("barrier on a pure QP matches qp_solve and qp_jacobian") {
  Rng rng(42);
  const Matrix B = oracles::random_matrix(rng, 4, 4);
  QpProblem qp;
  qp.Q = B.transpose() * B + Matrix::Identity(4, 4);
  qp.q = oracles::random_matrix(rng, 4, 1).col(0);
  qp.G = oracles::random_matrix(rng, 5, 4);
  const Vector v0 = oracles::random_matrix(rng, 4, 1).col(0);
  qp.h = qp.G * v0 + Vector::Constant(5, 0.5);

  // alpha enters the linear term: q(alpha) = q + alpha * u.
  const Vector u = oracles::random_matrix(rng, 4, 1).col(0);

  SmoothConvexProblem p;
  p.value = [&](const Vector& t) { return 0.5 * t.dot(qp.Q * t) + qp.q.dot(t); };
  p.grad = [&](const Vector& t) { return Vector(qp.Q * t + qp.q); };
  p.hess = [&](const Vector&) { return qp.Q; };
  p.cross = [&](const Vector&) { return Matrix(u); };
  p.param_dim = 1;
  p.G = qp.G;
  p.h = qp.h;
  p.theta0 = v0;

  const BarrierResult br = barrier_solve_diff(p);
  CHECK(br.kkt_residual <= 1e-7);

  const KktSolution s = qp_solve(qp);
  CHECK(oracles::rel_error_inf(br.theta, s.v_star, 1e-3) < 1e-6);

  QpPerturbation d;
  d.dq = u;
  const Vector want = qp_jacobian(qp, s, d);
  CHECK(oracles::rel_error_inf(br.jac.col(0), want, 1e-3) < 1e-5);
}

TEST_CASE("objective independent of alpha has zero Jacobian") {
  SmoothConvexProblem p;
  p.value = [](const Vector& t) { return 0.5 * t.squaredNorm(); };
  p.grad = [](const Vector& t) { return t; };
  p.hess = [](const Vector& t) { return Matrix(Matrix::Identity(t.size(), t.size())); };
  p.param_dim = 3;  // cross defaults to zero
  p.G = -Matrix::Identity(2, 2);
  p.h = Vector::Ones(2);
  p.theta0 = Vector::Zero(2);
  const BarrierResult br = barrier_solve_diff(p);
  CHECK(br.jac.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(br.theta.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("strictly active constraint pins the derivative to zero") {
  // minimize e^{alpha t} + t^2 subject to t >= 0, at alpha = 1: the
  // unconstrained slope at 0 is alpha > 0, so t* = 0 with lambda* = alpha.
  // 1-D KKT by hand: dt*/dalpha = 0 while the constraint stays active.
  const double alpha = 1.0;
  SmoothConvexProblem p;
  p.value = [=](const Vector& t) { return std::exp(alpha * t[0]) + t[0] * t[0]; };
  p.grad = [=](const Vector& t) {
    return Vector(Vector::Constant(1, alpha * std::exp(alpha * t[0]) + 2.0 * t[0]));
  };
  p.hess = [=](const Vector& t) {
    return Matrix(Matrix::Constant(1, 1, alpha * alpha * std::exp(alpha * t[0]) + 2.0));
  };
  p.cross = [=](const Vector& t) {
    return Matrix(Matrix::Constant(1, 1, std::exp(alpha * t[0]) * (1.0 + alpha * t[0])));
  };
  p.param_dim = 1;
  p.G = -Matrix::Identity(1, 1);
  p.h = Vector::Zero(1);
  p.theta0 = Vector::Ones(1);

  const BarrierResult br = barrier_solve_diff(p);
  CHECK(std::abs(br.theta[0]) < 1e-7);
  CHECK(br.lambda[0] == doctest::Approx(alpha).epsilon(1e-5));
  CHECK(std::abs(br.jac(0, 0)) < 1e-6);
}

TEST_CASE("barrier requires a strictly feasible start") {
  SmoothConvexProblem p;
  p.value = [](const Vector& t) { return t.squaredNorm(); };
  p.grad = [](const Vector& t) { return Vector(2 * t); };
  p.hess = [](const Vector& t) { return Matrix(2 * Matrix::Identity(t.size(), t.size())); };
  p.G = Matrix::Identity(1, 1);
  p.h = -Vector::Ones(1);  // t <= -1
  p.theta0 = Vector::Zero(1);
  CHECK_THROWS_AS(barrier_solve_diff(p), ArgumentError);
}
