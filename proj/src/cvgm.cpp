#include "cvgrad/cvgm.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "cvgrad/errors.hpp"
#include "cvgrad/io.hpp"

namespace cvgrad {

Projection Projection::none() { return Projection{}; }

Projection Projection::box(Vector lo, Vector hi) {
  Projection pr;
  pr.kind = ProjectionKind::box;
  pr.lo = std::move(lo);
  pr.hi = std::move(hi);
  return pr;
}

Projection Projection::simplex() {
  Projection pr;
  pr.kind = ProjectionKind::simplex;
  return pr;
}

Vector project(const Vector& alpha, const Projection& pr) {
  switch (pr.kind) {
    case ProjectionKind::none:
      return alpha;
    case ProjectionKind::box: {
      if (pr.lo.size() != alpha.size() || pr.hi.size() != alpha.size())
        throw ArgumentError("project: box bounds must match alpha");
      return alpha.cwiseMax(pr.lo).cwiseMin(pr.hi);
    }
    case ProjectionKind::simplex: {
      // Sort-and-threshold Euclidean projection onto {x >= 0, sum x = 1}.
      const Index d = alpha.size();
      std::vector<double> u(alpha.data(), alpha.data() + d);
      std::sort(u.begin(), u.end(), std::greater<double>());
      double cssv = 0;
      double tau = 0;
      Index rho = 0;
      for (Index j = 0; j < d; ++j) {
        cssv += u[static_cast<std::size_t>(j)];
        const double t = (cssv - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - t > 0) {
          rho = j + 1;
          tau = t;
        }
      }
      (void)rho;
      return (alpha.array() - tau).cwiseMax(0.0);
    }
  }
  throw ArgumentError("project: unknown projection kind");
}

CvEvaluator::CvEvaluator(const CvProblem& problem, const Dataset& data,
                         std::vector<Split> splits, int threads)
    : problem_(problem), threads_(threads) {
  if (splits.empty()) throw ArgumentError("cv: need at least one split");
  contexts_.reserve(splits.size());
  for (const Split& s : splits) contexts_.push_back(problem.prepare_fold(data, s));
}

FoldEval CvEvaluator::loss_and_grad(const Vector& alpha, bool want_grad) const {
  const int K = fold_count();
  std::vector<FoldEval> evals(static_cast<std::size_t>(K));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(K));

  auto run_fold = [&](int j) {
    try {
      evals[static_cast<std::size_t>(j)] =
          problem_.eval_fold(*contexts_[static_cast<std::size_t>(j)], alpha, want_grad);
    } catch (...) {
      errors[static_cast<std::size_t>(j)] = std::current_exception();
    }
  };

  const int workers = std::min(std::max(threads_, 0), K);
  if (workers <= 1) {
    for (int j = 0; j < K; ++j) run_fold(j);
  } else {
    std::vector<std::future<void>> futures;
    futures.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      futures.push_back(std::async(std::launch::async, [&, w]() {
        for (int j = w; j < K; j += workers) run_fold(j);
      }));
    }
    for (auto& f : futures) f.get();
  }

  // Fail fast on the lowest-indexed failing fold, independent of scheduling.
  for (int j = 0; j < K; ++j) {
    if (errors[static_cast<std::size_t>(j)]) {
      try {
        std::rethrow_exception(errors[static_cast<std::size_t>(j)]);
      } catch (const FoldError&) {
        throw;
      } catch (const std::exception& e) {
        throw FoldError(j, e.what());
      }
    }
  }

  // Reduce in fixed fold order so the result is independent of thread count.
  FoldEval total;
  total.loss = 0;
  if (want_grad) total.grad = Vector::Zero(problem_.alpha_dim());
  for (int j = 0; j < K; ++j) {
    total.loss += evals[static_cast<std::size_t>(j)].loss;
    if (want_grad) total.grad += evals[static_cast<std::size_t>(j)].grad;
  }
  total.loss /= static_cast<double>(K);
  if (want_grad) total.grad /= static_cast<double>(K);
  return total;
}

FoldEval cv_loss_and_grad(const CvProblem& problem, const Dataset& data,
                          const std::vector<Split>& splits, const Vector& alpha, int threads) {
  return CvEvaluator(problem, data, splits, threads).loss_and_grad(alpha);
}

void CvgmTrace::save_csv(const std::filesystem::path& path) const {
  if (records.empty()) throw ArgumentError("trace: nothing to save");
  const Index d = records.front().alpha.size();
  std::vector<std::string> cols = {"iter", "cv_loss", "grad_norm", "test_loss"};
  const bool alpha_cols = d <= 8;
  if (alpha_cols) {
    for (Index j = 0; j < d; ++j) cols.push_back("alpha" + std::to_string(j));
  } else {
    cols.push_back("alpha_norm");
  }
  for (const auto& [name, value] : records.front().extra) {
    (void)value;
    cols.push_back(name);
  }
  CsvWriter w(std::move(cols));
  for (const auto& r : records) {
    std::vector<double> row = {static_cast<double>(r.iter), r.cv_loss, r.grad_norm,
                               r.test_loss.value_or(std::numeric_limits<double>::quiet_NaN())};
    if (alpha_cols) {
      for (Index j = 0; j < d; ++j) row.push_back(r.alpha[j]);
    } else {
      row.push_back(r.alpha.norm());
    }
    for (const auto& [name, value] : r.extra) {
      (void)name;
      row.push_back(value);
    }
    w.add_row(row);
  }
  w.save(path);
}

CvgmResult cvgm_run(const CvProblem& problem, const Dataset& data, const CvgmConfig& cfg,
                    Vector alpha0, const Dataset* test_set, const TraceObserver& observer) {
  if (!(cfg.step_size >= 0)) throw ArgumentError("cvgm: step size must be >= 0");
  if (cfg.max_iters < 0) throw ArgumentError("cvgm: max_iters must be >= 0");

  const auto splits = sample_splits(data.size(), cfg.K, cfg.p, cfg.seed, cfg.split_mode);
  CvEvaluator eval(problem, data, splits, cfg.threads);

  CvgmResult out;
  Vector alpha = project(std::move(alpha0), cfg.projection);

  auto record = [&](int iter, const FoldEval& fe) {
    TraceRecord r;
    r.iter = iter;
    r.cv_loss = fe.loss;
    r.grad_norm = fe.grad.size() > 0 ? fe.grad.cwiseAbs().maxCoeff() : 0.0;
    r.alpha = alpha;
    if (test_set && cfg.track_test) {
      auto metrics = problem.test_metrics(data, *test_set, alpha);
      if (!metrics.empty()) {
        r.test_loss = metrics.front().second;
        r.extra.assign(metrics.begin() + 1, metrics.end());
      }
    }
    out.trace.records.push_back(std::move(r));
    if (observer) observer(out.trace.records.back());
  };

  for (int k = 0; k < cfg.max_iters; ++k) {
    FoldEval fe = eval.loss_and_grad(alpha, true);
    if (!std::isfinite(fe.loss))
      throw ConvergenceError("cvgm: cross-validation loss diverged; reduce the step size",
                             fe.loss);
    record(k, fe);
    Vector alpha_next = project(alpha - cfg.step_size * fe.grad, cfg.projection);
    const double change = (alpha_next - alpha).cwiseAbs().maxCoeff();
    alpha = std::move(alpha_next);
    if (cfg.convergence_tol > 0 && change <= cfg.convergence_tol) break;
  }

  // Final point: loss only, no update.
  FoldEval fe = eval.loss_and_grad(alpha, false);
  fe.grad = Vector::Zero(problem.alpha_dim());
  record(static_cast<int>(out.trace.records.size()), fe);

  out.alpha_star = std::move(alpha);
  return out;
}

}  // namespace cvgrad
