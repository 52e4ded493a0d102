#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cvgrad/errors.hpp"
#include "cvgrad/learners.hpp"
#include "cvgrad/newton.hpp"
#include "cvgrad/rng.hpp"
#include "oracles.hpp"

using namespace cvgrad;

TEST_CASE("logistic: tiny C shrinks theta to zero") {
  Rng rng(3);
  const Matrix X = oracles::random_matrix(rng, 8, 3);
  const Vector y = oracles::random_labels(rng, 8);
  const FitResult fit = fit_logistic(X, y, LogisticHyper{1e-10});
  CHECK(fit.theta.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("logistic: single example matches the bisection oracle") {
  // theta + pi - 1 = 0 with pi = sigmoid(theta); root found by bisection.
  auto f = [](double t) { return t + 1.0 / (1.0 + std::exp(-t)) - 1.0; };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? hi : lo) = mid;
  }
  const double oracle_theta = 0.5 * (lo + hi);
  CHECK(oracle_theta == doctest::Approx(0.4012).epsilon(1e-3));  // frozen digits

  Matrix X(1, 1);
  X << 1.0;
  Vector y(1);
  y << 1.0;
  const FitResult fit = fit_logistic(X, y, LogisticHyper{1.0});
  CHECK(fit.theta[0] == doctest::Approx(oracle_theta).epsilon(1e-9));
}

TEST_CASE("logistic: dtheta/dC matches central finite differences") {
  Matrix X(4, 2);
  X << 1.0, 0.5, -0.3, 1.2, 0.8, -0.7, -1.1, -0.2;
  Vector y(4);
  y << 1, 1, -1, -1;
  const double C = 10.0;
  const FitResult fit = fit_logistic(X, y, LogisticHyper{C});
  const double dc = 1e-5 * C;
  const Vector fd = (fit_logistic(X, y, LogisticHyper{C + dc}).theta -
                     fit_logistic(X, y, LogisticHyper{C - dc}).theta) /
                    (2.0 * dc);
  CHECK(oracles::rel_error_inf(fit.jac_hyper.col(0), fd) < 1e-4);
}

TEST_CASE("logistic: input Jacobians carry the pi-dependence term") {
  Rng rng(9);
  const Matrix X = oracles::random_matrix(rng, 6, 2);
  const Vector y = oracles::random_labels(rng, 6);
  const double C = 3.0;
  const FitResult fit = fit_logistic(X, y, LogisticHyper{C}, true);
  REQUIRE(fit.jac_inputs.size() == 6);

  const double dx = 1e-6;
  double worst = 0;
  for (Index i = 0; i < 6; ++i) {
    for (Index j = 0; j < 2; ++j) {
      Matrix Xp = X, Xm = X;
      Xp(i, j) += dx;
      Xm(i, j) -= dx;
      const Vector fd = (fit_logistic(Xp, y, LogisticHyper{C}).theta -
                         fit_logistic(Xm, y, LogisticHyper{C}).theta) /
                        (2.0 * dx);
      worst = std::max(worst,
                       oracles::rel_error_inf(fit.jac_inputs[static_cast<std::size_t>(i)].col(j), fd));
    }
  }
  CHECK(worst < 1e-4);

  // Without the rank-one correction from pi's dependence on x_i the formula
  // reduces to -H^{-1} C (pi-1) y I; confirm that truncated form disagrees
  // with finite differences on this instance (theta != 0).
  Vector d(6);
  Matrix H = Matrix::Identity(2, 2);
  for (Index i = 0; i < 6; ++i) {
    const double pi = 1.0 / (1.0 + std::exp(-y[i] * X.row(i).dot(fit.theta)));
    H += C * pi * (1.0 - pi) * X.row(i).transpose() * X.row(i);
    d[i] = pi;
  }
  const Matrix truncated0 =
      -H.llt().solve(Matrix(C * (d[0] - 1.0) * y[0] * Matrix::Identity(2, 2)));
  Matrix Xp = X, Xm = X;
  const double dx0 = 1e-6;
  Xp(0, 0) += dx0;
  Xm(0, 0) -= dx0;
  const Vector fd0 = (fit_logistic(Xp, y, LogisticHyper{C}).theta -
                      fit_logistic(Xm, y, LogisticHyper{C}).theta) /
                     (2.0 * dx0);
  CHECK(oracles::rel_error_inf(truncated0.col(0), fd0) > 1e-3);
}

TEST_CASE("logistic rejects bad arguments") {
  Matrix X(2, 1);
  X << 1, -1;
  Vector y(2);
  y << 1, -1;
  CHECK_THROWS_AS(fit_logistic(X, y, LogisticHyper{0.0}), ArgumentError);
  Vector bad(2);
  bad << 1, 2;
  CHECK_THROWS_AS(fit_logistic(X, bad, LogisticHyper{1.0}), ArgumentError);
}

TEST_CASE("elastic net: soft-threshold kill at large lambda1") {
  Rng rng(21);
  const Matrix X = oracles::random_matrix(rng, 10, 4);
  const Vector y = oracles::random_matrix(rng, 10, 1).col(0);
  const double bound = (X.transpose() * y).cwiseAbs().maxCoeff() / 10.0;
  const FitResult fit = fit_elastic_net(X, y, ElasticNetHyper{bound * 1.01, 1e-3});
  CHECK(fit.theta.cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("elastic net: lambda1 = 0 matches the ridge closed form") {
  Rng rng(22);
  const Matrix X = oracles::random_matrix(rng, 12, 5);
  const Vector y = oracles::random_matrix(rng, 12, 1).col(0);
  const double eps = ElasticNetHyper::kLambda2Min;
  const FitResult fit = fit_elastic_net(X, y, ElasticNetHyper{0.0, eps});
  const double N = 12.0;
  const Matrix A = X.transpose() * X / N + eps * Matrix::Identity(5, 5);
  const Vector want = A.llt().solve(X.transpose() * y / N);
  CHECK((fit.theta - want).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("elastic net: matches coordinate descent and finite differences") {
  Rng rng(23);
  const Matrix X = oracles::random_matrix(rng, 8, 5);
  const Vector y = oracles::random_matrix(rng, 8, 1).col(0);
  const double l1 = 0.05, l2 = 0.02;
  const FitResult fit = fit_elastic_net(X, y, ElasticNetHyper{l1, l2});
  const Vector cd = oracles::elastic_net_coordinate_descent(X, y, l1, l2);
  CHECK((fit.theta - cd).cwiseAbs().maxCoeff() < 1e-5);

  const double dl = 1e-5 * l2;
  const Vector fd = (fit_elastic_net(X, y, ElasticNetHyper{l1, l2 + dl}).theta -
                     fit_elastic_net(X, y, ElasticNetHyper{l1, l2 - dl}).theta) /
                    (2.0 * dl);
  CHECK(oracles::rel_error_inf(fit.jac_hyper.col(1), fd, 1e-4) < 1e-3);
}

TEST_CASE("elastic net rejects lambda2 below the floor") {
  Matrix X(2, 1);
  X << 1, 2;
  Vector y(2);
  y << 1, 2;
  CHECK_THROWS_AS(fit_elastic_net(X, y, ElasticNetHyper{0.0, 1e-9}), ArgumentError);
}

TEST_CASE("svm: separable two-point case has zero slack and unit margins") {
  Matrix X(2, 2);
  X << 1.0, 0.2, -1.0, -0.2;
  Vector y(2);
  y << 1, -1;
  const FitResult fit = fit_svm(X, y, SvmHyper{1e-6, 1e-4});
  const Vector margins = y.cwiseProduct(X * fit.theta);
  CHECK(margins.minCoeff() >= 1.0 - 1e-6);
  // objective ~ hinge 0 + tiny regularizers
  CHECK(fit.diagnostics.objective < 1e-3);
}

TEST_CASE("svm: huge lambda1 gives the all-slack solution") {
  Rng rng(31);
  const Matrix X = oracles::random_matrix(rng, 6, 2);
  const Vector y = oracles::random_labels(rng, 6);
  const FitResult fit = fit_svm(X, y, SvmHyper{1e3, 1e-3});
  CHECK(fit.theta.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(fit.diagnostics.objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("svm: objective matches the subgradient oracle") {
  Rng rng(32);
  const Matrix X = oracles::random_matrix(rng, 10, 3);
  const Vector y = oracles::random_labels(rng, 10);
  const double l1 = 0.05, l2 = 0.1;
  const FitResult fit = fit_svm(X, y, SvmHyper{l1, l2});
  const double oracle = oracles::svm_subgradient_objective(X, y, l1, l2);
  // the oracle is the weaker solver; it must not beat the QP optimum
  CHECK(fit.diagnostics.objective <= oracle + 1e-6);
  CHECK(std::abs(fit.diagnostics.objective - oracle) < 1e-3);
}

TEST_CASE("svm: hyper Jacobians match finite differences") {
  Rng rng(33);
  const Matrix X = oracles::random_matrix(rng, 8, 3);
  const Vector y = oracles::random_labels(rng, 8);
  const double l1 = 0.03, l2 = 0.08;
  const FitResult fit = fit_svm(X, y, SvmHyper{l1, l2});
  if (fit.diagnostics.complementarity_margin > 1e-4) {
    const double dl = 1e-6;
    const Vector fd1 = (fit_svm(X, y, SvmHyper{l1 + dl, l2}).theta -
                        fit_svm(X, y, SvmHyper{l1 - dl, l2}).theta) /
                       (2.0 * dl);
    CHECK(oracles::rel_error_inf(fit.jac_hyper.col(0), fd1, 1e-4) < 1e-3);
    const Vector fd2 = (fit_svm(X, y, SvmHyper{l1, l2 + dl}).theta -
                        fit_svm(X, y, SvmHyper{l1, l2 - dl}).theta) /
                       (2.0 * dl);
    CHECK(oracles::rel_error_inf(fit.jac_hyper.col(1), fd2, 1e-4) < 1e-3);
  }
}

namespace {

// Newton oracle for the alpha = (0,0,0,1) corner: smooth objective
// 1/N sum ln(1 + exp(-2 m_i)) + ridge/2 |theta|^2.
Vector logistic2_newton_oracle(const Matrix& X, const Vector& y, double ridge) {
  const double invN = 1.0 / static_cast<double>(X.rows());
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  auto grad = [&](const Vector& t) {
    Vector g = ridge * t;
    for (Index i = 0; i < X.rows(); ++i) {
      const double m = y[i] * X.row(i).dot(t);
      g += invN * (-2.0 * sig(-2.0 * m)) * y[i] * X.row(i).transpose();
    }
    return g;
  };
  auto hess = [&](const Vector& t) {
    Matrix H = ridge * Matrix::Identity(X.cols(), X.cols());
    for (Index i = 0; i < X.rows(); ++i) {
      const double m = y[i] * X.row(i).dot(t);
      const double s = sig(-2.0 * m);
      H += invN * 4.0 * s * (1.0 - s) * X.row(i).transpose() * X.row(i);
    }
    return H;
  };
  return newton_unconstrained_diff(grad, hess,
                                   [&](const Vector&) { return Matrix(Matrix::Zero(X.cols(), 0)); },
                                   Vector::Zero(X.cols()))
      .theta;
}

}  // namespace

TEST_CASE("loss combination: logistic corner matches the Newton oracle") {
  Rng rng(41);
  const Matrix X = oracles::random_matrix(rng, 8, 3);
  const Vector y = oracles::random_labels(rng, 8);
  const double ridge = 0.1;
  LossWeights w;
  w.alpha << 0, 0, 0, 1;
  const FitResult fit = fit_loss_combination(X, y, w, ridge);
  const Vector oracle = logistic2_newton_oracle(X, y, ridge);
  CHECK((fit.theta - oracle).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("loss combination: hinge corner matches the SVM learner") {
  Rng rng(42);
  const Matrix X = oracles::random_matrix(rng, 8, 3);
  const Vector y = oracles::random_labels(rng, 8);
  const double ridge = 0.15;
  LossWeights w;
  w.alpha << 1, 0, 0, 0;
  const FitResult combo = fit_loss_combination(X, y, w, ridge);
  const FitResult svm = fit_svm(X, y, SvmHyper{0.0, ridge});
  CHECK((combo.theta - svm.theta).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("loss combination: simplex-tangent directional derivatives match FD") {
  Rng rng(43);
  const Matrix X = oracles::random_matrix(rng, 7, 2);
  const Vector y = oracles::random_labels(rng, 7);
  const double ridge = 0.1;
  LossWeights w;
  w.alpha << 0.3, 0.25, 0.2, 0.25;
  const FitResult fit = fit_loss_combination(X, y, w, ridge);
  const double step = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector4d dir = Eigen::Vector4d::Zero();
    dir[k] = 1;
    dir[3] = -1;
    LossWeights wp{w.alpha + step * dir}, wm{w.alpha - step * dir};
    const Vector fd =
        (fit_loss_combination(X, y, wp, ridge).theta - fit_loss_combination(X, y, wm, ridge).theta) /
        (2.0 * step);
    CHECK(oracles::rel_error_inf(fit.jac_hyper * dir, fd, 1e-4) < 1e-3);
  }
}

TEST_CASE("loss combination validates the weights") {
  Matrix X(2, 1);
  X << 1, -1;
  Vector y(2);
  y << 1, -1;
  LossWeights w;
  w.alpha << 0.5, 0.5, 0.5, 0.5;  // sums to 2
  CHECK_THROWS_AS(fit_loss_combination(X, y, w, 0.1), ArgumentError);
  w.alpha << -0.5, 0.5, 0.5, 0.5;
  CHECK_THROWS_AS(fit_loss_combination(X, y, w, 0.1), ArgumentError);
}

TEST_CASE("losses: spec values") {
  Vector y(2);
  y << 1, 1;
  Vector same(2);
  same << 1, 1;
  CHECK(loss_regression(same, y) == 0.0);

  Vector zero = Vector::Zero(2);
  CHECK(loss_softmargin(zero, y) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Vector mixed(2);
  mixed << 1, -1;
  CHECK(loss_01(mixed, y) == 0.5);
}

TEST_CASE("soft-margin derivative matches finite differences and is overflow-safe") {
  Vector y(3);
  y << 1, -1, 1;
  Vector yhat(3);
  yhat << 0.3, -0.4, 2.0;
  const Vector d = loss_softmargin_dyhat(yhat, y);
  const double dx = 1e-7;
  for (Index i = 0; i < 3; ++i) {
    Vector p = yhat, m = yhat;
    p[i] += dx;
    m[i] -= dx;
    const double fd =
        (loss_softmargin(p, y) - loss_softmargin(m, y)) * 3.0 / (2.0 * dx);  // per-example
    CHECK(d[i] == doctest::Approx(fd).epsilon(1e-5));
  }
  Vector huge(1), ylab(1);
  huge << -1e4;
  ylab << 1;
  CHECK(std::isfinite(loss_softmargin(huge, ylab)));
  CHECK(loss_softmargin(huge, ylab) == doctest::Approx(1e4));
}

TEST_CASE("learner Jacobians match finite differences on random instances") {
  // Compact version of the gradient-fidelity battery (the acceptance suite
  // runs the full 50-instance sweep per learner).
  Rng rng(55);
  int done = 0;
  double worst = 0;
  while (done < 10) {
    const Index N = 5 + static_cast<Index>(rng.uniform_index(8));
    const Index n = 1 + static_cast<Index>(rng.uniform_index(4));
    const Matrix X = oracles::random_matrix(rng, N, n);
    const Vector y = oracles::random_matrix(rng, N, 1).col(0);
    const double l1 = rng.log_uniform(1e-3, 0.2);
    const double l2 = rng.log_uniform(1e-3, 0.2);
    const FitResult fit = fit_elastic_net(X, y, ElasticNetHyper{l1, l2});
    if (fit.diagnostics.complementarity_margin < 1e-4) continue;
    const double dl = 1e-5 * l1;
    const Vector fd = (fit_elastic_net(X, y, ElasticNetHyper{l1 + dl, l2}).theta -
                       fit_elastic_net(X, y, ElasticNetHyper{l1 - dl, l2}).theta) /
                      (2.0 * dl);
    worst = std::max(worst, oracles::rel_error_inf(fit.jac_hyper.col(0), fd, 1e-4));
    ++done;
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("predict applies the intercept") {
  Matrix X(2, 2);
  X << 1, 2, 3, 4;
  Vector theta(2);
  theta << 1, -1;
  const Vector out = predict(theta, 0.5, X);
  CHECK(out[0] == doctest::Approx(-0.5));
  CHECK(out[1] == doctest::Approx(-0.5));
}
