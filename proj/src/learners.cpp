#include "cvgrad/learners.hpp"

#include <cmath>

#include "cvgrad/barrier.hpp"
#include "cvgrad/errors.hpp"
#include "cvgrad/newton.hpp"
#include "cvgrad/qp.hpp"

namespace cvgrad {

namespace {

constexpr double kSvmDiagRepair = 1e-9;   // PD repair on the lifted SVM quadratic
constexpr double kEpigraphDiag = 1e-9;    // pins epigraph variables when their weight is 0

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(-m)), overflow-safe.
double softplus_neg(double m) {
  return std::log1p(std::exp(-std::abs(m))) + std::max(-m, 0.0);
}

void check_labels(VectorRef y) {
  for (Index i = 0; i < y.size(); ++i)
    if (y[i] != 1.0 && y[i] != -1.0) throw ArgumentError("labels must be -1 or +1");
}

void check_shapes(MatrixRef X, VectorRef y) {
  if (X.rows() != y.size()) throw ArgumentError("X rows must match y length");
  if (X.rows() < 1 || X.cols() < 1) throw ArgumentError("need N >= 1 and n >= 1");
}

double complementarity_margin(const QpProblem& p, const KktSolution& sol) {
  if (p.num_ineq() == 0) return std::numeric_limits<double>::infinity();
  const Vector slack = p.h - p.G * sol.v_star;
  return (slack.cwiseAbs() + sol.lambda_star).minCoeff();
}

}  // namespace

FitResult fit_logistic(MatrixRef X, VectorRef y, LogisticHyper h, bool want_input_jac) {
  check_shapes(X, y);
  check_labels(y);
  if (!(h.C > 0) || !std::isfinite(h.C)) throw ArgumentError("logistic: C must be positive");

  const Index n = X.cols();
  const Index N = X.rows();
  const double C = h.C;

  auto margins = [&](const Vector& theta) { return Vector(y.cwiseProduct(X * theta)); };
  auto grad = [&](const Vector& theta) {
    const Vector m = margins(theta);
    Vector w(N);
    for (Index i = 0; i < N; ++i) w[i] = (sigmoid(m[i]) - 1.0) * y[i];
    return Vector(theta + C * (X.transpose() * w));
  };
  auto hess = [&](const Vector& theta) {
    const Vector m = margins(theta);
    Vector d(N);
    for (Index i = 0; i < N; ++i) {
      const double pi = sigmoid(m[i]);
      d[i] = pi * (1.0 - pi);
    }
    return Matrix(Matrix::Identity(n, n) + C * (X.transpose() * d.asDiagonal() * X));
  };
  auto cross_C = [&](const Vector& theta) {
    const Vector m = margins(theta);
    Vector w(N);
    for (Index i = 0; i < N; ++i) w[i] = (sigmoid(m[i]) - 1.0) * y[i];
    return Matrix(X.transpose() * w);
  };

  NewtonResult nr = newton_unconstrained_diff(grad, hess, cross_C, Vector::Zero(n));

  FitResult out;
  out.theta = nr.theta;
  out.jac_hyper = nr.jac;
  out.diagnostics.residual = nr.grad_norm;
  out.diagnostics.iterations = nr.iterations;
  const Vector m = margins(out.theta);
  double obj = 0.5 * out.theta.squaredNorm();
  for (Index i = 0; i < N; ++i) obj += C * softplus_neg(m[i]);
  out.diagnostics.objective = obj;

  if (want_input_jac) {
    Eigen::LLT<Matrix> llt(hess(out.theta));
    out.jac_inputs.reserve(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i) {
      const double pi = sigmoid(m[i]);
      // d/dx_i of grad theta: C[(pi-1) y_i I + pi(1-pi) x_i theta'].
      Matrix B = C * (pi - 1.0) * y[i] * Matrix::Identity(n, n);
      B.noalias() += C * pi * (1.0 - pi) * (X.row(i).transpose() * out.theta.transpose());
      out.jac_inputs.push_back(-llt.solve(B));
    }
  }
  return out;
}

ElasticNetGram elastic_net_gram(MatrixRef X, VectorRef y) {
  check_shapes(X, y);
  const double N = static_cast<double>(X.rows());
  ElasticNetGram g;
  g.XtX_over_N = X.transpose() * X / N;
  g.Xty_over_N = X.transpose() * y / N;
  g.yty_over_N = y.squaredNorm() / N;
  g.N = X.rows();
  return g;
}

FitResult fit_elastic_net_gram(const ElasticNetGram& g, ElasticNetHyper h) {
  if (!(h.lambda1 >= 0) || !std::isfinite(h.lambda1))
    throw ArgumentError("elastic net: lambda1 must be >= 0");
  if (!(h.lambda2 >= ElasticNetHyper::kLambda2Min) || !std::isfinite(h.lambda2))
    throw ArgumentError("elastic net: lambda2 must be >= 1e-7");

  const Index n = g.XtX_over_N.rows();
  QpProblem p;
  p.Q = Matrix(2 * n, 2 * n);
  p.Q.topLeftCorner(n, n) = g.XtX_over_N + h.lambda2 * Matrix::Identity(n, n);
  p.Q.topRightCorner(n, n) = -g.XtX_over_N;
  p.Q.bottomLeftCorner(n, n) = -g.XtX_over_N;
  p.Q.bottomRightCorner(n, n) = g.XtX_over_N + h.lambda2 * Matrix::Identity(n, n);
  p.q.resize(2 * n);
  p.q.head(n) = -g.Xty_over_N + Vector::Constant(n, h.lambda1);
  p.q.tail(n) = g.Xty_over_N + Vector::Constant(n, h.lambda1);
  p.G = -Matrix::Identity(2 * n, 2 * n);
  p.h = Vector::Zero(2 * n);

  KktSolution sol = qp_solve(p);

  FitResult out;
  out.theta = sol.v_star.head(n) - sol.v_star.tail(n);
  out.jac_hyper.resize(n, 2);

  KktDirectionalSolver diff(p, sol);
  QpPerturbation d1;
  d1.dq = Vector::Ones(2 * n);
  const Vector dv1 = diff.directional(d1);
  out.jac_hyper.col(0) = dv1.head(n) - dv1.tail(n);
  QpPerturbation d2;
  d2.dQ = Matrix::Identity(2 * n, 2 * n);
  const Vector dv2 = diff.directional(d2);
  out.jac_hyper.col(1) = dv2.head(n) - dv2.tail(n);

  out.diagnostics.residual = sol.kkt_residual;
  out.diagnostics.iterations = sol.iterations;
  out.diagnostics.complementarity_margin = complementarity_margin(p, sol);
  out.diagnostics.objective = 0.5 * out.theta.dot(g.XtX_over_N * out.theta) -
                              g.Xty_over_N.dot(out.theta) + 0.5 * g.yty_over_N +
                              h.lambda1 * out.theta.cwiseAbs().sum() +
                              0.5 * h.lambda2 * out.theta.squaredNorm();
  return out;
}

FitResult fit_elastic_net(MatrixRef X, VectorRef y, ElasticNetHyper h) {
  return fit_elastic_net_gram(elastic_net_gram(X, y), h);
}

FitResult fit_svm(MatrixRef X, VectorRef y, SvmHyper h) {
  check_shapes(X, y);
  check_labels(y);
  if (!(h.lambda1 >= 0) || !std::isfinite(h.lambda1))
    throw ArgumentError("svm: lambda1 must be >= 0");
  if (!(h.lambda2 >= ElasticNetHyper::kLambda2Min) || !std::isfinite(h.lambda2))
    throw ArgumentError("svm: lambda2 must be >= 1e-7");

  const Index n = X.cols();
  const Index N = X.rows();
  const Index M = 2 * n + N;  // (theta_p, theta_n, t)

  QpProblem p;
  p.Q = Matrix::Zero(M, M);
  p.Q.topLeftCorner(n, n) = h.lambda2 * Matrix::Identity(n, n);
  p.Q.block(0, n, n, n) = -h.lambda2 * Matrix::Identity(n, n);
  p.Q.block(n, 0, n, n) = -h.lambda2 * Matrix::Identity(n, n);
  p.Q.block(n, n, n, n) = h.lambda2 * Matrix::Identity(n, n);
  p.Q.diagonal().array() += kSvmDiagRepair;
  p.q.resize(M);
  p.q.head(n) = Vector::Constant(n, h.lambda1);
  p.q.segment(n, n) = Vector::Constant(n, h.lambda1);
  p.q.tail(N) = Vector::Constant(N, 1.0 / static_cast<double>(N));

  // Rows: nonnegativity of all variables, then 1 - y_i theta'x_i <= t_i.
  p.G = Matrix::Zero(M + N, M);
  p.G.topLeftCorner(M, M) = -Matrix::Identity(M, M);
  p.h = Vector::Zero(M + N);
  for (Index i = 0; i < N; ++i) {
    p.G.block(M + i, 0, 1, n) = -y[i] * X.row(i);
    p.G.block(M + i, n, 1, n) = y[i] * X.row(i);
    p.G(M + i, 2 * n + i) = -1.0;
    p.h[M + i] = -1.0;
  }

  KktSolution sol = qp_solve(p);

  FitResult out;
  out.theta = sol.v_star.head(n) - sol.v_star.segment(n, n);
  out.jac_hyper.resize(n, 2);

  KktDirectionalSolver diff(p, sol);
  QpPerturbation d1;
  d1.dq = Vector::Zero(M);
  d1.dq.head(2 * n) = Vector::Ones(2 * n);
  const Vector dv1 = diff.directional(d1);
  out.jac_hyper.col(0) = dv1.head(n) - dv1.segment(n, n);
  QpPerturbation d2;
  d2.dQ = Matrix::Zero(M, M);
  d2.dQ.topLeftCorner(n, n) = Matrix::Identity(n, n);
  d2.dQ.block(0, n, n, n) = -Matrix::Identity(n, n);
  d2.dQ.block(n, 0, n, n) = -Matrix::Identity(n, n);
  d2.dQ.block(n, n, n, n) = Matrix::Identity(n, n);
  const Vector dv2 = diff.directional(d2);
  out.jac_hyper.col(1) = dv2.head(n) - dv2.segment(n, n);

  const Vector margins = y.cwiseProduct(X * out.theta);
  double hinge = 0;
  for (Index i = 0; i < N; ++i) hinge += std::max(0.0, 1.0 - margins[i]);
  out.diagnostics.residual = sol.kkt_residual;
  out.diagnostics.iterations = sol.iterations;
  out.diagnostics.complementarity_margin = complementarity_margin(p, sol);
  out.diagnostics.objective = hinge / static_cast<double>(N) +
                              h.lambda1 * out.theta.cwiseAbs().sum() +
                              0.5 * h.lambda2 * out.theta.squaredNorm();
  out.diagnostics.repair_delta = 0.5 * kSvmDiagRepair * sol.v_star.squaredNorm();
  return out;
}

FitResult fit_loss_combination(MatrixRef X, VectorRef y, const LossWeights& w, double ridge) {
  check_shapes(X, y);
  check_labels(y);
  if ((w.alpha.array() < 0).any()) throw ArgumentError("loss weights must be nonnegative");
  if (std::abs(w.alpha.sum() - 1.0) > 1e-8)
    throw ArgumentError("loss weights must sum to 1");
  if (!(ridge > 0)) throw ArgumentError("ridge must be positive");

  const Index n = X.cols();
  const Index N = X.rows();
  const double invN = 1.0 / static_cast<double>(N);
  const double a1 = w.alpha[0], a2 = w.alpha[1], a3 = w.alpha[2], a4 = w.alpha[3];

  // Variables (theta, t); constraints 1 - y_i x_i'theta <= t_i and t_i >= 0.
  SmoothConvexProblem p;
  p.param_dim = 4;
  p.G = Matrix::Zero(2 * N, n + N);
  p.h = Vector::Zero(2 * N);
  for (Index i = 0; i < N; ++i) {
    p.G.block(i, 0, 1, n) = -y[i] * X.row(i);
    p.G(i, n + i) = -1.0;
    p.h[i] = -1.0;
    p.G(N + i, n + i) = -1.0;
  }

  auto margins = [&, X, y](const Vector& z) { return Vector(y.cwiseProduct(X * z.head(n))); };

  p.value = [=](const Vector& z) {
    const Vector m = margins(z);
    const Vector t = z.tail(N);
    double val = a1 * t.sum();
    for (Index i = 0; i < N; ++i) {
      val += a2 * std::exp(-m[i]);
      val += a3 * std::pow(std::max(0.0, 1.0 - m[i]), 2);
      val += a4 * softplus_neg(2.0 * m[i]);
    }
    val *= invN;
    val += 0.5 * ridge * z.head(n).squaredNorm();
    val += 0.5 * kEpigraphDiag * t.squaredNorm();
    return val;
  };
  p.grad = [=](const Vector& z) {
    const Vector m = margins(z);
    Vector dm(N);
    for (Index i = 0; i < N; ++i)
      dm[i] = a2 * (-std::exp(-m[i])) + a3 * (-2.0 * std::max(0.0, 1.0 - m[i])) +
              a4 * (-2.0 * sigmoid(-2.0 * m[i]));
    Vector g(n + N);
    g.head(n) = invN * (X.transpose() * dm.cwiseProduct(y)) + ridge * z.head(n);
    g.tail(N) = Vector::Constant(N, a1 * invN) + kEpigraphDiag * z.tail(N);
    return g;
  };
  p.hess = [=](const Vector& z) {
    const Vector m = margins(z);
    Vector d2(N);
    for (Index i = 0; i < N; ++i) {
      const double sg = sigmoid(-2.0 * m[i]);
      d2[i] = a2 * std::exp(-m[i]) + a3 * (m[i] < 1.0 ? 2.0 : 0.0) + a4 * 4.0 * sg * (1.0 - sg);
    }
    Matrix H = Matrix::Zero(n + N, n + N);
    H.topLeftCorner(n, n) =
        invN * (X.transpose() * d2.asDiagonal() * X) + ridge * Matrix::Identity(n, n);
    H.bottomRightCorner(N, N) = kEpigraphDiag * Matrix::Identity(N, N);
    return H;
  };
  p.cross = [=](const Vector& z) {
    const Vector m = margins(z);
    Matrix cr = Matrix::Zero(n + N, 4);
    cr.block(n, 0, N, 1) = Vector::Constant(N, invN);
    Vector de(N), dt(N), dl(N);
    for (Index i = 0; i < N; ++i) {
      de[i] = -std::exp(-m[i]);
      dt[i] = -2.0 * std::max(0.0, 1.0 - m[i]);
      dl[i] = -2.0 * sigmoid(-2.0 * m[i]);
    }
    cr.block(0, 1, n, 1) = invN * (X.transpose() * de.cwiseProduct(y));
    cr.block(0, 2, n, 1) = invN * (X.transpose() * dt.cwiseProduct(y));
    cr.block(0, 3, n, 1) = invN * (X.transpose() * dl.cwiseProduct(y));
    return cr;
  };
  p.theta0 = Vector::Zero(n + N);
  p.theta0.tail(N).setConstant(2.0);

  BarrierResult br = barrier_solve_diff(p);

  FitResult out;
  out.theta = br.theta.head(n);
  out.jac_hyper = br.jac.topRows(n);
  out.diagnostics.residual = br.kkt_residual;
  out.diagnostics.iterations = br.newton_steps;
  const Vector slack = p.h - p.G * br.theta;
  out.diagnostics.complementarity_margin = (slack.cwiseAbs() + br.lambda).minCoeff();
  out.diagnostics.repair_delta = 0.5 * kEpigraphDiag * br.theta.tail(N).squaredNorm();
  out.diagnostics.objective = br.objective - out.diagnostics.repair_delta;
  return out;
}

Vector predict(const Vector& theta, double intercept, MatrixRef X) {
  return (X * theta).array() + intercept;
}

double loss_regression(VectorRef yhat, VectorRef y) {
  if (yhat.size() != y.size()) throw ArgumentError("loss: size mismatch");
  return (yhat - y).squaredNorm() / static_cast<double>(y.size());
}

double loss_softmargin(VectorRef yhat, VectorRef y) {
  if (yhat.size() != y.size()) throw ArgumentError("loss: size mismatch");
  double total = 0;
  for (Index i = 0; i < y.size(); ++i) total += softplus_neg(y[i] * yhat[i]);
  return total / static_cast<double>(y.size());
}

Vector loss_softmargin_dyhat(VectorRef yhat, VectorRef y) {
  if (yhat.size() != y.size()) throw ArgumentError("loss: size mismatch");
  Vector d(y.size());
  for (Index i = 0; i < y.size(); ++i) d[i] = -y[i] * sigmoid(-y[i] * yhat[i]);
  return d;
}

double loss_01(VectorRef yhat, VectorRef y) {
  if (yhat.size() != y.size()) throw ArgumentError("loss: size mismatch");
  Index wrong = 0;
  for (Index i = 0; i < y.size(); ++i) {
    const double pred = yhat[i] > 0 ? 1.0 : -1.0;
    if (pred != y[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(y.size());
}

}  // namespace cvgrad
