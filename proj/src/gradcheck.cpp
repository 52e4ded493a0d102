#include "cvgrad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "cvgrad/cvgm.hpp"
#include "cvgrad/dataset.hpp"
#include "cvgrad/errors.hpp"
#include "cvgrad/kernel.hpp"
#include "cvgrad/learners.hpp"
#include "cvgrad/problems.hpp"
#include "cvgrad/qp.hpp"
#include "cvgrad/rng.hpp"

namespace cvgrad {

namespace {

constexpr double kMarginFloor = 1e-4;  // strict-complementarity filter

double rel_error(const Vector& got, const Vector& want) {
  const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-9);
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

QpProblem random_qp(Rng& rng) {
  const Index m = 2 + static_cast<Index>(rng.uniform_index(7));  // 2..8
  const Index c = 1 + static_cast<Index>(rng.uniform_index(8));  // 1..8
  Matrix B(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) B(i, j) = rng.normal();
  QpProblem p;
  p.Q = B.transpose() * B + 0.1 * Matrix::Identity(m, m);
  p.q.resize(m);
  for (Index i = 0; i < m; ++i) p.q[i] = rng.normal();
  p.G.resize(c, m);
  for (Index i = 0; i < c; ++i)
    for (Index j = 0; j < m; ++j) p.G(i, j) = rng.normal();
  Vector v0(m);
  for (Index i = 0; i < m; ++i) v0[i] = rng.normal();
  p.h = p.G * v0;
  for (Index i = 0; i < c; ++i) p.h[i] += rng.uniform(0.1, 1.1);  // strictly feasible at v0
  return p;
}

QpPerturbation random_direction(Rng& rng, const QpProblem& p) {
  QpPerturbation d;
  const Index m = p.num_vars();
  const Index c = p.num_ineq();
  Matrix dq_sym(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j <= i; ++j) dq_sym(i, j) = dq_sym(j, i) = rng.normal();
  d.dQ = dq_sym;
  d.dq.resize(m);
  for (Index i = 0; i < m; ++i) d.dq[i] = rng.normal();
  d.dG.resize(c, m);
  for (Index i = 0; i < c; ++i)
    for (Index j = 0; j < m; ++j) d.dG(i, j) = rng.normal();
  d.dh.resize(c);
  for (Index i = 0; i < c; ++i) d.dh[i] = rng.normal();
  return d;
}

QpProblem perturbed(const QpProblem& p, const QpPerturbation& d, double t) {
  QpProblem out = p;
  if (d.dQ.size() > 0) out.Q += t * d.dQ;
  if (d.dq.size() > 0) out.q += t * d.dq;
  if (d.dG.size() > 0) out.G += t * d.dG;
  if (d.dh.size() > 0) out.h += t * d.dh;
  return out;
}

double qp_margin(const QpProblem& p, const KktSolution& s) {
  if (p.num_ineq() == 0) return std::numeric_limits<double>::infinity();
  return ((p.h - p.G * s.v_star).cwiseAbs() + s.lambda_star).minCoeff();
}

std::vector<bool> qp_active_set(const QpProblem& p, const KktSolution& s) {
  std::vector<bool> act;
  const Vector slack = p.h - p.G * s.v_star;
  for (Index i = 0; i < slack.size(); ++i) act.push_back(slack[i] < 1e-6);
  return act;
}

GradCheckEntry check_qp(std::uint64_t seed, int instances) {
  GradCheckEntry e{"qp_directional", 0, 1e-4, 0, 0, true};
  Rng rng(seed);
  while (e.instances < instances) {
    const QpProblem p = random_qp(rng);
    const QpPerturbation d = random_direction(rng, p);
    KktSolution s, sp, sm;
    const double step = 1e-5;
    const QpProblem pp = perturbed(p, d, step);
    const QpProblem pm = perturbed(p, d, -step);
    try {
      s = qp_solve(p);
      sp = qp_solve(pp);
      sm = qp_solve(pm);
    } catch (const std::exception&) {
      ++e.skipped;
      continue;
    }
    if (qp_margin(p, s) < kMarginFloor || qp_active_set(p, s) != qp_active_set(pp, sp) ||
        qp_active_set(p, s) != qp_active_set(pm, sm)) {
      ++e.skipped;
      continue;
    }
    const Vector fd = (sp.v_star - sm.v_star) / (2.0 * step);
    const Vector an = qp_jacobian(p, s, d);
    e.max_rel_error = std::max(e.max_rel_error, rel_error(an, fd));
    ++e.instances;
  }
  e.passed = e.max_rel_error < e.threshold;
  return e;
}

Matrix random_matrix(Rng& rng, Index rows, Index cols) {
  Matrix X(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) X(i, j) = rng.normal();
  return X;
}

Vector random_labels(Rng& rng, Index N) {
  Vector y(N);
  for (Index i = 0; i < N; ++i) y[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return y;
}

GradCheckEntry check_logistic(std::uint64_t seed, int instances, bool corrupt) {
  GradCheckEntry e{"logistic_jac", 0, 1e-3, 0, 0, true};
  Rng rng(seed);
  for (int k = 0; k < instances; ++k) {
    const Index N = 4 + static_cast<Index>(rng.uniform_index(12));
    const Index n = 1 + static_cast<Index>(rng.uniform_index(4));
    const Matrix X = random_matrix(rng, N, n);
    const Vector y = random_labels(rng, N);
    const double C = rng.log_uniform(0.05, 20.0);

    FitResult fit = fit_logistic(X, y, LogisticHyper{C}, true);
    if (corrupt && k == 0) fit.jac_hyper.array() += 1e-2;

    const double dc = 1e-5 * std::max(1.0, C);
    const Vector tp = fit_logistic(X, y, LogisticHyper{C + dc}).theta;
    const Vector tm = fit_logistic(X, y, LogisticHyper{C - dc}).theta;
    e.max_rel_error =
        std::max(e.max_rel_error, rel_error(fit.jac_hyper.col(0), (tp - tm) / (2.0 * dc)));

    // Input Jacobian along a random coordinate of a random example.
    const Index i = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(N)));
    const Index j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    const double dx = 1e-6;
    Matrix Xp = X, Xm = X;
    Xp(i, j) += dx;
    Xm(i, j) -= dx;
    const Vector fd = (fit_logistic(Xp, y, LogisticHyper{C}).theta -
                       fit_logistic(Xm, y, LogisticHyper{C}).theta) /
                      (2.0 * dx);
    e.max_rel_error = std::max(
        e.max_rel_error, rel_error(fit.jac_inputs[static_cast<std::size_t>(i)].col(j), fd));
    ++e.instances;
  }
  e.passed = e.max_rel_error < e.threshold;
  return e;
}

// Shared driver for the two QP learners: FD over (lambda1, lambda2) with a
// strict-complementarity filter.
GradCheckEntry check_qp_learner(
    const std::string& name, std::uint64_t seed, int instances, bool classification,
    const std::function<FitResult(MatrixRef, VectorRef, double, double)>& fit) {
  GradCheckEntry e{name, 0, 1e-3, 0, 0, true};
  Rng rng(seed);
  while (e.instances < instances) {
    const Index N = 4 + static_cast<Index>(rng.uniform_index(12));
    const Index n = 1 + static_cast<Index>(rng.uniform_index(4));
    const Matrix X = random_matrix(rng, N, n);
    Vector y;
    if (classification) {
      y = random_labels(rng, N);
    } else {
      y = random_matrix(rng, N, 1).col(0);
    }
    const double l1 = rng.log_uniform(1e-3, 0.3);
    const double l2 = rng.log_uniform(1e-3, 0.3);

    FitResult fit0;
    try {
      fit0 = fit(X, y, l1, l2);
    } catch (const std::exception&) {
      ++e.skipped;
      continue;
    }
    if (fit0.diagnostics.complementarity_margin < kMarginFloor) {
      ++e.skipped;
      continue;
    }
    bool unstable = false;
    for (int which = 0; which < 2 && !unstable; ++which) {
      const double v = which == 0 ? l1 : l2;
      const double dv = 1e-5 * std::max(0.1, v);
      const FitResult fp = fit(X, y, which == 0 ? l1 + dv : l1, which == 0 ? l2 : l2 + dv);
      const FitResult fm = fit(X, y, which == 0 ? l1 - dv : l1, which == 0 ? l2 : l2 - dv);
      if (fp.diagnostics.complementarity_margin < kMarginFloor ||
          fm.diagnostics.complementarity_margin < kMarginFloor) {
        unstable = true;
        break;
      }
      const Vector fd = (fp.theta - fm.theta) / (2.0 * dv);
      e.max_rel_error = std::max(e.max_rel_error, rel_error(fit0.jac_hyper.col(which), fd));
    }
    if (unstable) {
      ++e.skipped;
      continue;
    }
    ++e.instances;
  }
  e.passed = e.max_rel_error < e.threshold;
  return e;
}

GradCheckEntry check_loss_combination(std::uint64_t seed, int instances) {
  GradCheckEntry e{"loss_combination_jac", 0, 1e-3, 0, 0, true};
  Rng rng(seed);
  const double ridge = 0.1;
  while (e.instances < instances) {
    const Index N = 4 + static_cast<Index>(rng.uniform_index(10));
    const Index n = 1 + static_cast<Index>(rng.uniform_index(3));
    const Matrix X = random_matrix(rng, N, n);
    const Vector y = random_labels(rng, N);
    Eigen::Vector4d a;
    for (int j = 0; j < 4; ++j) a[j] = rng.uniform(0.1, 1.0);
    a /= a.sum();  // interior point of the simplex

    FitResult fit0;
    try {
      fit0 = fit_loss_combination(X, y, LossWeights{a}, ridge);
    } catch (const std::exception&) {
      ++e.skipped;
      continue;
    }
    if (fit0.diagnostics.complementarity_margin < kMarginFloor) {
      ++e.skipped;
      continue;
    }
    // Simplex-tangent directions keep the weights on the constraint plane.
    const double step = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector4d dir = Eigen::Vector4d::Zero();
      dir[k] = 1.0;
      dir[3] = -1.0;
      const Eigen::Vector4d ap = a + step * dir;
      const Eigen::Vector4d am = a - step * dir;
      const Vector tp = fit_loss_combination(X, y, LossWeights{ap}, ridge).theta;
      const Vector tm = fit_loss_combination(X, y, LossWeights{am}, ridge).theta;
      const Vector fd = (tp - tm) / (2.0 * step);
      const Vector an = fit0.jac_hyper * dir;
      e.max_rel_error = std::max(e.max_rel_error, rel_error(an, fd));
    }
    ++e.instances;
  }
  e.passed = e.max_rel_error < e.threshold;
  return e;
}

GradCheckEntry check_kernel(std::uint64_t seed, int instances) {
  GradCheckEntry e{"kernel_backward", 0, 1e-4, 0, 0, true};
  Rng rng(seed);
  for (int k = 0; k < instances; ++k) {
    const KernelArch arch = k % 2 == 0 ? KernelArch::one_layer : KernelArch::two_layer;
    const KernelParams kp = init_kernel(arch, rng.next_u64());
    const Index N = 5;
    const Matrix X = random_matrix(rng, N, 2);
    Matrix R = random_matrix(rng, N, 2);  // linear functional L = <R, phi(X)>

    KernelTape tape;
    const Matrix V = kernel_forward(kp, X, &tape);
    (void)V;
    const Vector grad = kernel_backward(kp, tape, R);
    Vector flat = kernel_flatten(kp);

    const int probes = 25;
    const double dx = 1e-6;
    for (int t = 0; t < probes; ++t) {
      const Index idx = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(flat.size())));
      Vector fp = flat, fm = flat;
      fp[idx] += dx;
      fm[idx] -= dx;
      const double lp = (R.array() * kernel_forward(kernel_unflatten(arch, fp), X).array()).sum();
      const double lm = (R.array() * kernel_forward(kernel_unflatten(arch, fm), X).array()).sum();
      const double fd = (lp - lm) / (2.0 * dx);
      const double scale = std::max(std::abs(fd), 1e-6);
      e.max_rel_error = std::max(e.max_rel_error, std::abs(grad[idx] - fd) / scale);
    }
    ++e.instances;
  }
  e.passed = e.max_rel_error < e.threshold;
  return e;
}

GradCheckEntry check_cv(std::uint64_t seed, int points) {
  GradCheckEntry e{"cv_gradient_elastic_net", 0, 1e-3, 0, 0, true};
  Rng rng(seed);
  const auto sample = make_regression(24, 5, 4, 10.0, Rng::derive(seed, 1));
  const auto splits = sample_splits(24, 16, 0.9, Rng::derive(seed, 2));
  ElasticNetCvProblem problem;
  CvEvaluator eval(problem, sample.data, splits);

  while (e.instances < points) {
    Vector alpha(2);
    alpha[0] = rng.log_uniform(3e-3, 3e-2);
    alpha[1] = rng.log_uniform(3e-3, 3e-2);
    const FoldEval fe = eval.loss_and_grad(alpha, true);

    bool unstable = false;
    Vector fd(2);
    for (int j = 0; j < 2 && !unstable; ++j) {
      const double dv = 1e-5 * alpha[j];
      auto fd_at = [&](double step) {
        Vector ap = alpha, am = alpha;
        ap[j] += step;
        am[j] -= step;
        return (eval.loss_and_grad(ap, false).loss - eval.loss_and_grad(am, false).loss) /
               (2.0 * step);
      };
      const double f1 = fd_at(dv);
      const double f2 = fd_at(dv / 2.0);
      // Active-set changes show up as inconsistent difference quotients.
      if (std::abs(f1 - f2) > 1e-4 * std::max(1.0, std::abs(f1))) {
        unstable = true;
        break;
      }
      fd[j] = f2;
    }
    if (unstable) {
      ++e.skipped;
      continue;
    }
    e.max_rel_error = std::max(e.max_rel_error, rel_error(fe.grad, fd));
    ++e.instances;
  }
  e.passed = e.max_rel_error < e.threshold;
  return e;
}

}  // namespace

bool GradCheckReport::all_passed() const {
  for (const auto& e : entries)
    if (!e.passed) return false;
  return true;
}

GradCheckReport run_gradcheck(const std::vector<std::string>& checks, std::uint64_t seed,
                              bool corrupt_hook) {
  GradCheckReport report;
  for (const std::string& name : checks) {
    if (name == "qp") {
      report.entries.push_back(check_qp(Rng::derive(seed, 10), 60));
    } else if (name == "logistic") {
      report.entries.push_back(check_logistic(Rng::derive(seed, 11), 25, corrupt_hook));
    } else if (name == "elastic_net") {
      report.entries.push_back(check_qp_learner(
          "elastic_net_jac", Rng::derive(seed, 12), 25, false,
          [](MatrixRef X, VectorRef y, double l1, double l2) {
            return fit_elastic_net(X, y, ElasticNetHyper{l1, l2});
          }));
    } else if (name == "svm") {
      report.entries.push_back(check_qp_learner(
          "svm_jac", Rng::derive(seed, 13), 25, true,
          [](MatrixRef X, VectorRef y, double l1, double l2) {
            return fit_svm(X, y, SvmHyper{l1, l2});
          }));
    } else if (name == "loss_combination") {
      report.entries.push_back(check_loss_combination(Rng::derive(seed, 14), 15));
    } else if (name == "kernel") {
      report.entries.push_back(check_kernel(Rng::derive(seed, 15), 6));
    } else if (name == "cv") {
      report.entries.push_back(check_cv(Rng::derive(seed, 16), 8));
    } else {
      throw ArgumentError("gradcheck: unknown check '" + name + "'");
    }
  }
  return report;
}

}  // namespace cvgrad
