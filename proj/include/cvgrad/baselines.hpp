#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cvgrad/cvgm.hpp"

namespace cvgrad {

// Per-dimension log-scale intervals; resolution applies in grid mode
// (resolution 1 degenerates to the single point lo).
struct SearchSpace {
  Vector lo;  // > 0
  Vector hi;
  std::vector<int> resolution;  // >= 1 per dimension
  Index dim() const { return lo.size(); }
  void validate() const;
};

struct SearchRecord {
  int step = 0;
  Vector alpha;
  double cv_loss = 0;
  double best_so_far = 0;
};

struct SearchResult {
  Vector best_alpha;
  double best_loss = 0;
  std::vector<SearchRecord> log;
  // Columns step,alpha...,cv_loss,best_so_far.
  void save_csv(const std::filesystem::path& path) const;
};

// Evaluates the cross-validation loss on a log-spaced grid (last dimension
// fastest); ties keep the earlier point. A failed evaluation scores +inf and
// the search continues. Grid size must not exceed `budget`.
SearchResult grid_search(const CvEvaluator& eval, const SearchSpace& space, int budget);

// Log-uniform sampling over the same intervals, `budget` draws.
SearchResult random_search(const CvEvaluator& eval, const SearchSpace& space, int budget,
                           std::uint64_t seed);

}  // namespace cvgrad
