#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cvgrad/types.hpp"

namespace cvgrad {

enum class Task { regression, classification };

// Immutable after construction; rows of `features` are examples.
// Classification targets are -1/+1.
struct Dataset {
  Matrix features;  // N x n
  Vector targets;   // N
  Task task = Task::regression;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  void validate() const;  // throws ArgumentError on any invariant violation
};

// One cross-validation fold: disjoint train/validation index sets covering 0..N-1.
struct Split {
  std::vector<Index> train_idx;
  std::vector<Index> val_idx;
};

// Per-feature affine transform fit on a row subset: (x - mean) / std,
// population (divide-by-N) std floored at kEpsStd.
struct Normalizer {
  static constexpr double kEpsStd = 1e-12;
  Vector means;
  Vector stds;
};

struct RegressionSample {
  Dataset data;
  Vector true_coef;  // exactly n - n_informative zeros
};

// Standard-normal X, coefficients 100 * N(0,1) on the first n_informative
// features (zero elsewhere), y = X beta + noise_std * N(0,1).
RegressionSample make_regression(Index N, Index n, Index n_informative, double noise_std,
                                 std::uint64_t seed);

// Two classes on rings: radius N(r1, radial_std) for label +1 (first N/2 rows),
// N(r2, radial_std) for label -1, angle Unif(-pi, pi), mapped to Cartesian.
Dataset make_rings(Index N, double r1, double r2, double radial_std, std::uint64_t seed);

// Two-dimensional XOR: label +1 uniform on [-3,0.6]x[-0.6,3] or [-0.6,3]x[-3,0.6]
// (equal probability), label -1 on the two diagonal boxes.
Dataset make_xor(Index N, std::uint64_t seed);

Normalizer fit_normalizer(const Dataset& d, const std::vector<Index>& idx);
Dataset apply_normalizer(const Normalizer& nrm, const Dataset& d);

enum class SplitMode {
  independent,  // each split an independent uniform draw of size floor(p*N)
  stratified,   // validation indices cycled through shuffled permutations for even coverage
};

// K splits with |T_j| = floor(p*N); deterministic given seed.
std::vector<Split> sample_splits(Index N, int K, double p, std::uint64_t seed,
                                 SplitMode mode = SplitMode::independent);

Dataset subset(const Dataset& d, const std::vector<Index>& idx);

// Reference rules for the synthetic generators (test/report baselines).
// Rings: classify +1 iff |x|_2 < radius; radius 1.5 is the optimal threshold
// for the (1, 2, 0.4) configuration.
double ring_threshold_accuracy(const Dataset& d, double radius);
// XOR: classify +1 iff x0*x1 < 0 (optimal for the generator's boxes).
double xor_rule_accuracy(const Dataset& d);
// Exact accuracy of the optimal rule under the XOR generator, from the
// overlap areas of the class boxes.
double xor_bayes_accuracy();

// CSV with header x0,...,x{n-1},y; values in round-trip precision.
void save_dataset_csv(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset_csv(const std::filesystem::path& path, Task task);

}  // namespace cvgrad
