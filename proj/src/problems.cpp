#include "cvgrad/problems.hpp"

#include <cmath>

#include "cvgrad/errors.hpp"

namespace cvgrad {

namespace {

struct RegressionFoldData {
  ElasticNetGram gram;
  Matrix Xv;        // normalized validation features
  Vector yv;        // original-unit validation targets
  double y_mean = 0;
  double y_scale = 1;
};

// Normalize features on the training rows, center and unit-scale the training
// targets; statistics are constant w.r.t. alpha.
RegressionFoldData make_regression_fold(const Dataset& d, const std::vector<Index>& train_idx,
                                        const std::vector<Index>& val_idx) {
  const Normalizer nrm = fit_normalizer(d, train_idx);
  const Dataset normalized = apply_normalizer(nrm, d);
  const Dataset train = subset(normalized, train_idx);

  RegressionFoldData fd;
  fd.y_mean = train.targets.mean();
  Vector centered = train.targets.array() - fd.y_mean;
  fd.y_scale = std::max(std::sqrt(centered.squaredNorm() / static_cast<double>(centered.size())),
                        Normalizer::kEpsStd);
  fd.gram = elastic_net_gram(train.features, centered / fd.y_scale);
  if (!val_idx.empty()) {
    const Dataset val = subset(normalized, val_idx);
    fd.Xv = val.features;
    fd.yv = val.targets;
  }
  return fd;
}

struct ElasticNetFoldContext : FoldContext {
  RegressionFoldData fd;
};

ElasticNetHyper hyper_from(const Vector& alpha) {
  if (alpha.size() != 2) throw ArgumentError("elastic net problem: alpha must be (lambda1, lambda2)");
  return ElasticNetHyper{alpha[0], alpha[1]};
}

}  // namespace

std::unique_ptr<FoldContext> ElasticNetCvProblem::prepare_fold(const Dataset& d,
                                                               const Split& s) const {
  if (d.task != Task::regression) throw ArgumentError("elastic net problem: regression data required");
  auto ctx = std::make_unique<ElasticNetFoldContext>();
  ctx->fd = make_regression_fold(d, s.train_idx, s.val_idx);
  return ctx;
}

FoldEval ElasticNetCvProblem::eval_fold(const FoldContext& ctx_base, const Vector& alpha,
                                        bool want_grad) const {
  const auto& fd = static_cast<const ElasticNetFoldContext&>(ctx_base).fd;
  const FitResult fit = fit_elastic_net_gram(fd.gram, hyper_from(alpha));

  const Index nv = fd.yv.size();
  const Vector pred = (fd.Xv * fit.theta * fd.y_scale).array() + fd.y_mean;
  const Vector err = pred - fd.yv;

  FoldEval fe;
  fe.loss = err.squaredNorm() / static_cast<double>(nv);
  if (want_grad) {
    const Vector dtheta = (2.0 * fd.y_scale / static_cast<double>(nv)) * (fd.Xv.transpose() * err);
    fe.grad = fit.jac_hyper.transpose() * dtheta;
  }
  return fe;
}

std::vector<std::pair<std::string, double>> ElasticNetCvProblem::test_metrics(
    const Dataset& train, const Dataset& test, const Vector& alpha) const {
  std::vector<Index> all(static_cast<std::size_t>(train.size()));
  for (Index i = 0; i < train.size(); ++i) all[static_cast<std::size_t>(i)] = i;
  const Normalizer nrm = fit_normalizer(train, all);

  RegressionFoldData fd;
  const Dataset train_n = apply_normalizer(nrm, train);
  fd.y_mean = train_n.targets.mean();
  Vector centered = train_n.targets.array() - fd.y_mean;
  fd.y_scale = std::max(std::sqrt(centered.squaredNorm() / static_cast<double>(centered.size())),
                        Normalizer::kEpsStd);
  fd.gram = elastic_net_gram(train_n.features, centered / fd.y_scale);

  const FitResult fit = fit_elastic_net_gram(fd.gram, hyper_from(alpha));
  const Dataset test_n = apply_normalizer(nrm, test);
  const Vector pred = (test_n.features * fit.theta * fd.y_scale).array() + fd.y_mean;
  const double mse = (pred - test.targets).squaredNorm() / static_cast<double>(test.size());
  return {{"test_loss", mse}};
}

namespace {

struct KernelFoldContext : FoldContext {
  Matrix Xt, Xv;
  Vector yt, yv;
};

}  // namespace

std::unique_ptr<FoldContext> KernelLogisticCvProblem::prepare_fold(const Dataset& d,
                                                                   const Split& s) const {
  if (d.task != Task::classification)
    throw ArgumentError("kernel problem: classification data required");
  auto ctx = std::make_unique<KernelFoldContext>();
  const Dataset train = subset(d, s.train_idx);
  const Dataset val = subset(d, s.val_idx);
  ctx->Xt = train.features;
  ctx->yt = train.targets;
  ctx->Xv = val.features;
  ctx->yv = val.targets;
  return ctx;
}

FoldEval KernelLogisticCvProblem::eval_fold(const FoldContext& ctx_base, const Vector& alpha,
                                            bool want_grad) const {
  const auto& ctx = static_cast<const KernelFoldContext&>(ctx_base);
  const KernelParams kp = kernel_unflatten(arch_, alpha);

  KernelTape tape_t, tape_v;
  const Matrix Vt = kernel_forward(kp, ctx.Xt, want_grad ? &tape_t : nullptr);
  const Matrix Vv = kernel_forward(kp, ctx.Xv, want_grad ? &tape_v : nullptr);

  const FitResult fit = fit_logistic(Vt, ctx.yt, LogisticHyper{C_}, want_grad);
  const Vector yhat = Vv * fit.theta;

  FoldEval fe;
  fe.loss = loss_softmargin(yhat, ctx.yv);
  if (!want_grad) return fe;

  const double inv_nv = 1.0 / static_cast<double>(ctx.yv.size());
  const Vector w = inv_nv * loss_softmargin_dyhat(yhat, ctx.yv);

  // Path through the validation features.
  Matrix dVv = w * fit.theta.transpose();
  // Path through theta, then each training feature vector.
  const Vector dtheta = Vv.transpose() * w;
  Matrix dVt(Vt.rows(), Vt.cols());
  for (Index i = 0; i < Vt.rows(); ++i)
    dVt.row(i) = (fit.jac_inputs[static_cast<std::size_t>(i)].transpose() * dtheta).transpose();

  fe.grad = kernel_backward(kp, tape_t, dVt) + kernel_backward(kp, tape_v, dVv);
  return fe;
}

std::vector<std::pair<std::string, double>> KernelLogisticCvProblem::test_metrics(
    const Dataset& train, const Dataset& test, const Vector& alpha) const {
  const KernelParams kp = kernel_unflatten(arch_, alpha);
  const Matrix Vt = kernel_forward(kp, train.features);
  const FitResult fit = fit_logistic(Vt, train.targets, LogisticHyper{C_});
  const Matrix Vtest = kernel_forward(kp, test.features);
  const Vector yhat = Vtest * fit.theta;
  return {{"test_loss", loss_softmargin(yhat, test.targets)},
          {"test_accuracy", 1.0 - loss_01(yhat, test.targets)}};
}

namespace {

struct LossComboFoldContext : FoldContext {
  Matrix Xt, Xv;
  Vector yt, yv;
};

LossWeights weights_from(const Vector& alpha) {
  if (alpha.size() != 4) throw ArgumentError("loss combination: alpha must have 4 entries");
  LossWeights w;
  w.alpha = alpha;
  return w;
}

}  // namespace

std::unique_ptr<FoldContext> LossCombinationCvProblem::prepare_fold(const Dataset& d,
                                                                    const Split& s) const {
  if (d.task != Task::classification)
    throw ArgumentError("loss combination problem: classification data required");
  auto ctx = std::make_unique<LossComboFoldContext>();
  const Dataset train = subset(d, s.train_idx);
  const Dataset val = subset(d, s.val_idx);
  ctx->Xt = train.features;
  ctx->yt = train.targets;
  ctx->Xv = val.features;
  ctx->yv = val.targets;
  return ctx;
}

FoldEval LossCombinationCvProblem::eval_fold(const FoldContext& ctx_base, const Vector& alpha,
                                             bool want_grad) const {
  const auto& ctx = static_cast<const LossComboFoldContext&>(ctx_base);
  const FitResult fit = fit_loss_combination(ctx.Xt, ctx.yt, weights_from(alpha), ridge_);
  const Vector yhat = ctx.Xv * fit.theta;

  FoldEval fe;
  fe.loss = loss_softmargin(yhat, ctx.yv);
  if (want_grad) {
    const Vector w = loss_softmargin_dyhat(yhat, ctx.yv) / static_cast<double>(ctx.yv.size());
    const Vector dtheta = ctx.Xv.transpose() * w;
    fe.grad = fit.jac_hyper.transpose() * dtheta;
  }
  return fe;
}

std::vector<std::pair<std::string, double>> LossCombinationCvProblem::test_metrics(
    const Dataset& train, const Dataset& test, const Vector& alpha) const {
  const FitResult fit = fit_loss_combination(train.features, train.targets, weights_from(alpha),
                                             ridge_);
  const Vector yhat = test.features * fit.theta;
  return {{"test_loss", loss_softmargin(yhat, test.targets)},
          {"test_accuracy", 1.0 - loss_01(yhat, test.targets)}};
}

}  // namespace cvgrad
