#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cvgrad/dataset.hpp"
#include "cvgrad/types.hpp"

namespace cvgrad {

enum class ProjectionKind { none, box, simplex };

struct Projection {
  ProjectionKind kind = ProjectionKind::none;
  Vector lo, hi;  // box only; +/-inf entries allowed

  static Projection none();
  static Projection box(Vector lo, Vector hi);
  static Projection simplex();
};

// Euclidean projection; simplex via sort-and-threshold.
Vector project(const Vector& alpha, const Projection& pr);

// Opaque per-fold cache built once per (data, splits): normalization,
// Gram blocks, anything invariant in alpha.
class FoldContext {
 public:
  virtual ~FoldContext() = default;
};

struct FoldEval {
  double loss = 0;
  Vector grad;
};

// A cross-validatable problem: learner + validation loss (+ feature map).
class CvProblem {
 public:
  virtual ~CvProblem() = default;
  virtual Index alpha_dim() const = 0;
  virtual std::unique_ptr<FoldContext> prepare_fold(const Dataset& d, const Split& s) const = 0;
  virtual FoldEval eval_fold(const FoldContext& ctx, const Vector& alpha, bool want_grad) const = 0;
  // Full-data refit at alpha, evaluated on a held-out set. First entry is the
  // canonical test loss; extra entries are problem-specific (e.g. accuracy).
  virtual std::vector<std::pair<std::string, double>> test_metrics(const Dataset& train,
                                                                   const Dataset& test,
                                                                   const Vector& alpha) const = 0;
};

// Caches fold contexts for one (problem, data, splits) and evaluates the
// cross-validation risk
//   L_cv(alpha) = 1/K sum_j 1/|V_j| sum_{i in V_j} l(A_alpha(T_j), z_i)
// and its gradient. Folds may be evaluated on `threads` workers; results are
// reduced in fold order, so the value is independent of scheduling.
class CvEvaluator {
 public:
  CvEvaluator(const CvProblem& problem, const Dataset& data, std::vector<Split> splits,
              int threads = 0);
  FoldEval loss_and_grad(const Vector& alpha, bool want_grad = true) const;
  int fold_count() const { return static_cast<int>(contexts_.size()); }
  const CvProblem& problem() const { return problem_; }

 private:
  const CvProblem& problem_;
  std::vector<std::unique_ptr<FoldContext>> contexts_;
  int threads_;
};

// One-shot form of the evaluator.
FoldEval cv_loss_and_grad(const CvProblem& problem, const Dataset& data,
                          const std::vector<Split>& splits, const Vector& alpha,
                          int threads = 0);

struct CvgmConfig {
  int K = 16;            // recommended 16..128
  double p = 0.9;        // train fraction, 1/N <= p < 1
  double step_size = 1e-2;
  int max_iters = 100;
  Projection projection;
  std::uint64_t seed = 0;
  double convergence_tol = 0;  // inf-norm of the alpha update; 0 = run max_iters
  int threads = 0;             // 0 = serial
  SplitMode split_mode = SplitMode::independent;
  bool track_test = true;      // refit on full data per iteration when a test set is given
};

struct TraceRecord {
  int iter = 0;
  double cv_loss = 0;
  double grad_norm = 0;                // inf-norm
  std::optional<double> test_loss;
  Vector alpha;
  std::vector<std::pair<std::string, double>> extra;
};

struct CvgmTrace {
  std::vector<TraceRecord> records;
  // Columns iter,cv_loss,grad_norm,test_loss then alpha components when
  // dim <= 8, else a single alpha_norm column.
  void save_csv(const std::filesystem::path& path) const;
};

struct CvgmResult {
  Vector alpha_star;
  CvgmTrace trace;
};

// Called after each trace record is appended (checkpointing hooks).
using TraceObserver = std::function<void(const TraceRecord&)>;

// Projected gradient descent on the cross-validation risk. Splits are sampled
// once up front and reused every iteration. Record k holds the metrics at
// alpha_k before the k-th update; the final record holds the returned point.
CvgmResult cvgm_run(const CvProblem& problem, const Dataset& data, const CvgmConfig& cfg,
                    Vector alpha0, const Dataset* test_set = nullptr,
                    const TraceObserver& observer = {});

}  // namespace cvgrad
