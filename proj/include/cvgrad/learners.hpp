#pragma once

#include <limits>
#include <vector>

#include "cvgrad/types.hpp"

namespace cvgrad {

struct LogisticHyper {
  double C = 1.0;  // > 0
};

struct ElasticNetHyper {
  static constexpr double kLambda2Min = 1e-7;
  double lambda1 = 0.0;  // >= 0
  double lambda2 = kLambda2Min;
};

struct SvmHyper {
  double lambda1 = 0.0;
  double lambda2 = ElasticNetHyper::kLambda2Min;
};

// Weights over the four classification surrogates, on the probability simplex:
// (hinge, exponential, truncated quadratic, logistic with 2*y*yhat scaling).
struct LossWeights {
  Eigen::Vector4d alpha;
};

struct FitDiagnostics {
  double residual = 0;      // solver KKT / gradient residual at the optimum
  int iterations = 0;
  double objective = 0;     // learner objective at theta (original, unrepaired form)
  double repair_delta = 0;  // objective shift introduced by any PD diagonal repair
  // min over constraints of |slack| + dual; small values flag weak strict
  // complementarity (Jacobians unreliable there). +inf when unconstrained.
  double complementarity_margin = std::numeric_limits<double>::infinity();
};

struct FitResult {
  Vector theta;
  double intercept = 0;
  Matrix jac_hyper;                // n x d, d(theta)/d(alpha)
  std::vector<Matrix> jac_inputs;  // optional: per-example n x n blocks d(theta)/d(x_i)
  FitDiagnostics diagnostics;
};

// min 1/2 theta'theta + C sum_i log(1 + exp(-y_i x_i'theta)).
// jac_hyper is n x 1 (d theta / d C). With want_input_jac, jac_inputs[i]
// holds d theta / d x_i including the term from pi_i's dependence on x_i.
FitResult fit_logistic(MatrixRef X, VectorRef y, LogisticHyper h, bool want_input_jac = false);

// min 1/(2N) |X theta - y|^2 + lambda1 |theta|_1 + lambda2/2 |theta|^2,
// solved as a QP over the positive/negative split v = [theta_p; theta_n] >= 0.
// jac_hyper is n x 2 with columns d theta / d lambda1, d theta / d lambda2.
FitResult fit_elastic_net(MatrixRef X, VectorRef y, ElasticNetHyper h);

// Precomputed Gram form of the same learner, for repeated fits on fixed data.
struct ElasticNetGram {
  Matrix XtX_over_N;  // n x n
  Vector Xty_over_N;  // n
  double yty_over_N = 0;
  Index N = 0;
};
ElasticNetGram elastic_net_gram(MatrixRef X, VectorRef y);
FitResult fit_elastic_net_gram(const ElasticNetGram& g, ElasticNetHyper h);

// min 1/N sum max(0, 1 - y_i theta'x_i) + lambda1 |theta|_1 + lambda2/2 |theta|^2
// as the epigraph QP over (theta_p, theta_n, t). The lifted quadratic is only
// PSD; a 1e-9 diagonal restores PD and the induced objective shift is
// reported in diagnostics.repair_delta.
FitResult fit_svm(MatrixRef X, VectorRef y, SvmHyper h);

// min 1/N sum_i [ a1 t_i + a2 exp(-m_i) + a3 max(0,1-m_i)^2 + a4 ln(1+exp(-2 m_i)) ]
//     + ridge/2 |theta|^2,  m_i = y_i theta'x_i,
// s.t. 1 - m_i <= t_i, t_i >= 0. jac_hyper is n x 4 (d theta / d alpha_k).
FitResult fit_loss_combination(MatrixRef X, VectorRef y, const LossWeights& w, double ridge);

Vector predict(const Vector& theta, double intercept, MatrixRef X);

double loss_regression(VectorRef yhat, VectorRef y);  // mean squared error
double loss_softmargin(VectorRef yhat, VectorRef y);  // mean log(1 + exp(-y*yhat)), overflow-safe
// Per-example derivative of log(1 + exp(-y*yhat)) in yhat: -y * sigma(-y*yhat).
Vector loss_softmargin_dyhat(VectorRef yhat, VectorRef y);
double loss_01(VectorRef yhat, VectorRef y);  // misclassification rate, sign(yhat) vs y

}  // namespace cvgrad
