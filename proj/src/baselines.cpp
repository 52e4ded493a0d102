#include "cvgrad/baselines.hpp"

#include <cmath>
#include <limits>

#include "cvgrad/errors.hpp"
#include "cvgrad/io.hpp"
#include "cvgrad/rng.hpp"

namespace cvgrad {

void SearchSpace::validate() const {
  if (lo.size() == 0 || lo.size() != hi.size())
    throw ArgumentError("search space: lo/hi must be nonempty and equal length");
  for (Index j = 0; j < lo.size(); ++j) {
    if (!(lo[j] > 0) || !(hi[j] >= lo[j]))
      throw ArgumentError("search space: need 0 < lo <= hi (log scale)");
  }
  if (!resolution.empty()) {
    if (static_cast<Index>(resolution.size()) != lo.size())
      throw ArgumentError("search space: resolution must match dimension");
    for (int r : resolution)
      if (r < 1) throw ArgumentError("search space: resolution must be >= 1");
  }
}

namespace {

SearchResult run_search(const CvEvaluator& eval, const std::vector<Vector>& points) {
  SearchResult out;
  out.best_loss = std::numeric_limits<double>::infinity();
  int step = 0;
  for (const Vector& alpha : points) {
    double loss;
    try {
      loss = eval.loss_and_grad(alpha, false).loss;
    } catch (const std::exception&) {
      loss = std::numeric_limits<double>::infinity();  // bad corner; keep searching
    }
    if (loss < out.best_loss) {
      out.best_loss = loss;
      out.best_alpha = alpha;
    }
    out.log.push_back(SearchRecord{step++, alpha, loss, out.best_loss});
  }
  if (!std::isfinite(out.best_loss) && out.log.empty())
    throw ArgumentError("search: no evaluations");
  if (out.best_alpha.size() == 0) out.best_alpha = points.front();
  return out;
}

}  // namespace

SearchResult grid_search(const CvEvaluator& eval, const SearchSpace& space, int budget) {
  space.validate();
  if (space.resolution.empty())
    throw ArgumentError("grid search: resolution required");
  const Index d = space.dim();
  long total = 1;
  for (int r : space.resolution) total *= r;
  if (total > budget) throw ArgumentError("grid search: grid size exceeds budget");

  // Log-spaced axes; enumeration is lexicographic with the last dimension fastest.
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    const int r = space.resolution[static_cast<std::size_t>(j)];
    auto& axis = axes[static_cast<std::size_t>(j)];
    axis.resize(static_cast<std::size_t>(r));
    const double llo = std::log(space.lo[j]);
    const double lhi = std::log(space.hi[j]);
    if (r == 1) {
      axis[0] = space.lo[j];
    } else {
      for (int i = 0; i < r; ++i)
        axis[static_cast<std::size_t>(i)] =
            std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(r - 1));
    }
  }
  std::vector<Vector> points;
  points.reserve(static_cast<std::size_t>(total));
  std::vector<int> ix(static_cast<std::size_t>(d), 0);
  while (true) {
    Vector alpha(d);
    for (Index j = 0; j < d; ++j)
      alpha[j] = axes[static_cast<std::size_t>(j)][static_cast<std::size_t>(ix[static_cast<std::size_t>(j)])];
    points.push_back(std::move(alpha));
    Index j = d - 1;
    while (true) {
      if (++ix[static_cast<std::size_t>(j)] < space.resolution[static_cast<std::size_t>(j)]) break;
      ix[static_cast<std::size_t>(j)] = 0;
      if (j == 0) goto done;
      --j;
    }
  }
done:
  return run_search(eval, points);
}

SearchResult random_search(const CvEvaluator& eval, const SearchSpace& space, int budget,
                           std::uint64_t seed) {
  space.validate();
  if (budget < 1) throw ArgumentError("random search: budget must be >= 1");
  Rng rng(seed);
  std::vector<Vector> points;
  points.reserve(static_cast<std::size_t>(budget));
  for (int i = 0; i < budget; ++i) {
    Vector alpha(space.dim());
    for (Index j = 0; j < space.dim(); ++j) alpha[j] = rng.log_uniform(space.lo[j], space.hi[j]);
    points.push_back(std::move(alpha));
  }
  return run_search(eval, points);
}

void SearchResult::save_csv(const std::filesystem::path& path) const {
  if (log.empty()) throw ArgumentError("search log: nothing to save");
  const Index d = log.front().alpha.size();
  std::vector<std::string> cols = {"step"};
  for (Index j = 0; j < d; ++j) cols.push_back("alpha" + std::to_string(j));
  cols.push_back("cv_loss");
  cols.push_back("best_so_far");
  CsvWriter w(std::move(cols));
  for (const auto& r : log) {
    std::vector<double> row = {static_cast<double>(r.step)};
    for (Index j = 0; j < d; ++j) row.push_back(r.alpha[j]);
    row.push_back(r.cv_loss);
    row.push_back(r.best_so_far);
    w.add_row(row);
  }
  w.save(path);
}

}  // namespace cvgrad
