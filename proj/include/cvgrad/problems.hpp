#pragma once

#include "cvgrad/cvgm.hpp"
#include "cvgrad/kernel.hpp"
#include "cvgrad/learners.hpp"

namespace cvgrad {

// Elastic-net regression with the standard tabular pipeline, per fold:
// features normalized on the training rows, targets centered (intercept) and
// scaled to unit variance on the training rows, elastic net fit on the
// transformed data, predictions mapped back to original units. Normalizer,
// intercept and scale are treated as constant w.r.t. alpha = (lambda1, lambda2).
// Validation loss is mean squared error in original units.
class ElasticNetCvProblem : public CvProblem {
 public:
  Index alpha_dim() const override { return 2; }
  std::unique_ptr<FoldContext> prepare_fold(const Dataset& d, const Split& s) const override;
  FoldEval eval_fold(const FoldContext& ctx, const Vector& alpha, bool want_grad) const override;
  std::vector<std::pair<std::string, double>> test_metrics(const Dataset& train,
                                                           const Dataset& test,
                                                           const Vector& alpha) const override;
};

// Logistic regression on a learned feature map phi_alpha (alpha = flattened
// kernel weights). Validation loss is the soft-margin loss; its gradient
// flows through both the validation features and the fitted theta (via
// d theta / d v_i on the training features), then back through the kernel.
class KernelLogisticCvProblem : public CvProblem {
 public:
  KernelLogisticCvProblem(KernelArch arch, double C) : arch_(arch), C_(C) {}
  Index alpha_dim() const override { return kernel_param_count(arch_); }
  std::unique_ptr<FoldContext> prepare_fold(const Dataset& d, const Split& s) const override;
  FoldEval eval_fold(const FoldContext& ctx, const Vector& alpha, bool want_grad) const override;
  // test_metrics: {test_loss (soft-margin), test_accuracy}
  std::vector<std::pair<std::string, double>> test_metrics(const Dataset& train,
                                                           const Dataset& test,
                                                           const Vector& alpha) const override;
  KernelArch arch() const { return arch_; }
  double C() const { return C_; }

 private:
  KernelArch arch_;
  double C_;
};

// Convex combination of classification surrogates; alpha lives on the
// 4-simplex. Validation loss is the soft-margin loss.
class LossCombinationCvProblem : public CvProblem {
 public:
  explicit LossCombinationCvProblem(double ridge) : ridge_(ridge) {}
  Index alpha_dim() const override { return 4; }
  std::unique_ptr<FoldContext> prepare_fold(const Dataset& d, const Split& s) const override;
  FoldEval eval_fold(const FoldContext& ctx, const Vector& alpha, bool want_grad) const override;
  std::vector<std::pair<std::string, double>> test_metrics(const Dataset& train,
                                                           const Dataset& test,
                                                           const Vector& alpha) const override;

 private:
  double ridge_;
};

}  // namespace cvgrad
