#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "cvgrad/dataset.hpp"
#include "cvgrad/errors.hpp"
#include "cvgrad/io.hpp"

using namespace cvgrad;

TEST_CASE("make_regression basic shape and sparsity") {
  const auto s = make_regression(30, 10, 8, 100.0, 7);
  CHECK(s.data.size() == 30);
  CHECK(s.data.dim() == 10);
  CHECK(s.data.task == Task::regression);
  int zeros = 0;
  for (Index j = 0; j < 10; ++j)
    if (s.true_coef[j] == 0.0) ++zeros;
  CHECK(zeros == 2);
}

TEST_CASE("make_regression with zero noise is exact") {
  const auto s = make_regression(5, 3, 3, 0.0, 123);
  const Vector residual = s.data.targets - s.data.features * s.true_coef;
  CHECK(residual.cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("make_regression noise variance matches the generator") {
  // Monte Carlo check of the generator itself: the residual is N(0, 100^2).
  const auto s = make_regression(1000, 10, 8, 100.0, 99);
  const Vector residual = s.data.targets - s.data.features * s.true_coef;
  const double mean = residual.mean();
  const double var = (residual.array() - mean).square().sum() / (residual.size() - 1);
  CHECK(var == doctest::Approx(100.0 * 100.0).epsilon(0.15));
}

TEST_CASE("make_regression argument errors") {
  CHECK_THROWS_AS(make_regression(0, 3, 1, 1.0, 1), ArgumentError);
  CHECK_THROWS_AS(make_regression(5, 3, 4, 1.0, 1), ArgumentError);
  CHECK_THROWS_AS(make_regression(5, 3, 2, -1.0, 1), ArgumentError);
}

TEST_CASE("make_rings class balance and radii") {
  const Dataset d = make_rings(60, 1.0, 2.0, 0.4, 11);
  CHECK(d.task == Task::classification);
  int pos = 0;
  double mean_radius_pos = 0;
  for (Index i = 0; i < 60; ++i) {
    if (d.targets[i] == 1.0) {
      ++pos;
      mean_radius_pos += d.features.row(i).norm();
    }
  }
  CHECK(pos == 30);
  mean_radius_pos /= 30.0;
  // mean radius of class +1 within 3*sigma/sqrt(30) of 1.0
  CHECK(std::abs(mean_radius_pos - 1.0) < 3.0 * 0.4 / std::sqrt(30.0));
}

TEST_CASE("make_rings with vanishing noise pins the radii") {
  const Dataset d = make_rings(2, 1.0, 2.0, 1e-9, 3);
  CHECK(d.features.row(0).norm() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(d.features.row(1).norm() == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("make_rings tail fraction matches the Gaussian oracle") {
  const Dataset d = make_rings(100000, 1.0, 2.0, 0.4, 17);
  Index beyond = 0, pos = 0;
  for (Index i = 0; i < d.size(); ++i) {
    if (d.targets[i] != 1.0) continue;
    ++pos;
    if (d.features.row(i).norm() > 1.5) ++beyond;
  }
  const double frac = static_cast<double>(beyond) / static_cast<double>(pos);
  const double phi = 0.5 * std::erfc(1.25 / std::sqrt(2.0));  // P(N(1,.4) > 1.5)
  CHECK(std::abs(frac - phi) < 0.01);
}

TEST_CASE("make_rings rejects odd N") {
  CHECK_THROWS_AS(make_rings(3, 1.0, 2.0, 0.4, 1), ArgumentError);
}

TEST_CASE("make_xor shape and support") {
  const Dataset d = make_xor(100, 5);
  int pos = 0;
  for (Index i = 0; i < 100; ++i) {
    if (d.targets[i] == 1.0) ++pos;
    CHECK(d.features(i, 0) >= -3.0);
    CHECK(d.features(i, 0) <= 3.0);
    CHECK(d.features(i, 1) >= -3.0);
    CHECK(d.features(i, 1) <= 3.0);
  }
  CHECK(pos == 50);

  const Dataset tiny = make_xor(2, 5);
  CHECK(tiny.targets[0] == 1.0);
  CHECK(tiny.targets[1] == -1.0);
  CHECK_THROWS_AS(make_xor(7, 5), ArgumentError);
}

TEST_CASE("xor optimal-rule accuracy matches the analytic overlap value") {
  // Cell-decomposition oracle: each class is a two-box mixture with box
  // geometry [-3,0.6]x[-0.6,3], so accuracy = (9 + a^2)/(3 + a)^2 at a = 0.6.
  const double analytic = xor_bayes_accuracy();
  CHECK(analytic == doctest::Approx((9.0 + 0.36) / 12.96).epsilon(1e-12));
  const Dataset d = make_xor(50000, 23);
  CHECK(std::abs(xor_rule_accuracy(d) - analytic) < 0.01);
}

TEST_CASE("normalizer two-point case") {
  Dataset d;
  d.features.resize(2, 1);
  d.features << 0.0, 2.0;
  d.targets = Vector::Zero(2);
  const Normalizer nrm = fit_normalizer(d, {0, 1});
  CHECK(nrm.means[0] == doctest::Approx(1.0));
  CHECK(nrm.stds[0] == doctest::Approx(1.0));  // population std
  const Dataset t = apply_normalizer(nrm, d);
  CHECK(t.features(0, 0) == doctest::Approx(-1.0));
  CHECK(t.features(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("normalizer floors degenerate columns") {
  Dataset d;
  d.features = Matrix::Constant(4, 2, 3.5);
  d.features.col(1) << 1, 2, 3, 4;
  d.targets = Vector::Zero(4);
  const Normalizer nrm = fit_normalizer(d, {0, 1, 2, 3});
  CHECK(nrm.stds[0] == Normalizer::kEpsStd);
  const Dataset t = apply_normalizer(nrm, d);
  CHECK(t.features.col(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("normalizer round trip on the fitted rows") {
  const auto s = make_regression(40, 6, 6, 1.0, 31);
  std::vector<Index> train;
  for (Index i = 0; i < 25; ++i) train.push_back(i);
  const Normalizer nrm = fit_normalizer(s.data, train);
  const Dataset t = apply_normalizer(nrm, s.data);
  for (Index j = 0; j < 6; ++j) {
    double mean = 0, var = 0;
    for (Index i : train) mean += t.features(i, j);
    mean /= 25.0;
    for (Index i : train) var += std::pow(t.features(i, j) - mean, 2);
    var /= 25.0;
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-10);
  }
  CHECK_THROWS_AS(fit_normalizer(s.data, {}), ArgumentError);
}

TEST_CASE("sample_splits sizes and partition property") {
  const auto splits = sample_splits(30, 128, 0.95, 41);
  CHECK(splits.size() == 128);
  for (const Split& s : splits) {
    CHECK(s.train_idx.size() == 28);
    CHECK(s.val_idx.size() == 2);
    std::set<Index> seen(s.train_idx.begin(), s.train_idx.end());
    CHECK(seen.size() == 28);
    for (Index v : s.val_idx) CHECK(seen.insert(v).second);  // disjoint
    CHECK(seen.size() == 30);                                // covering
  }
}

TEST_CASE("sample_splits two-point case") {
  const auto splits = sample_splits(2, 1, 0.5, 9);
  REQUIRE(splits.size() == 1);
  CHECK(splits[0].train_idx.size() == 1);
  CHECK(splits[0].val_idx.size() == 1);
  CHECK(splits[0].train_idx[0] != splits[0].val_idx[0]);
}

TEST_CASE("sample_splits validation frequency is uniform") {
  const auto splits = sample_splits(10, 10000, 0.8, 77);
  std::vector<int> counts(10, 0);
  for (const Split& s : splits)
    for (Index v : s.val_idx) ++counts[static_cast<std::size_t>(v)];
  for (int c : counts) {
    // every index appears in V with frequency 0.2 +/- 0.02 (|V| = 2 of 10)
    const double freq = static_cast<double>(c) / 10000.0;
    CHECK(std::abs(freq - 0.2) < 0.02);
  }
}

TEST_CASE("sample_splits argument errors") {
  CHECK_THROWS_AS(sample_splits(10, 1, 0.01, 1), ArgumentError);  // empty train
  CHECK_THROWS_AS(sample_splits(10, 1, 1.0, 1), ArgumentError);   // empty validation
  CHECK_THROWS_AS(sample_splits(10, 0, 0.5, 1), ArgumentError);
}

TEST_CASE("stratified splits cover indices evenly") {
  const auto splits = sample_splits(12, 9, 0.75, 13, SplitMode::stratified);
  std::vector<int> counts(12, 0);
  for (const Split& s : splits) {
    CHECK(s.train_idx.size() == 9);
    CHECK(s.val_idx.size() == 3);
    for (Index v : s.val_idx) ++counts[static_cast<std::size_t>(v)];
  }
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  CHECK(*hi - *lo <= 1);
}

TEST_CASE("generators are reproducible") {
  const auto a = make_regression(20, 4, 3, 2.0, 1234);
  const auto b = make_regression(20, 4, 3, 2.0, 1234);
  CHECK(a.data.features == b.data.features);
  CHECK(a.data.targets == b.data.targets);
  CHECK(a.true_coef == b.true_coef);

  const Dataset r1 = make_rings(40, 1.0, 2.0, 0.4, 55);
  const Dataset r2 = make_rings(40, 1.0, 2.0, 0.4, 55);
  CHECK(r1.features == r2.features);

  const auto s1 = sample_splits(15, 7, 0.8, 3);
  const auto s2 = sample_splits(15, 7, 0.8, 3);
  for (std::size_t k = 0; k < s1.size(); ++k) {
    CHECK(s1[k].train_idx == s2[k].train_idx);
    CHECK(s1[k].val_idx == s2[k].val_idx);
  }
}

TEST_CASE("dataset csv round trip is exact") {
  const auto s = make_regression(12, 3, 2, 5.0, 71);
  const auto path = std::filesystem::temp_directory_path() / "cvgrad_test_dataset.csv";
  save_dataset_csv(s.data, path);
  const Dataset back = load_dataset_csv(path, Task::regression);
  CHECK(back.features == s.data.features);
  CHECK(back.targets == s.data.targets);
  std::filesystem::remove(path);
}

TEST_CASE("dataset validation rejects bad labels") {
  Dataset d;
  d.features = Matrix::Ones(2, 1);
  d.targets = Vector::Ones(2);
  d.targets[1] = 0.5;
  d.task = Task::classification;
  CHECK_THROWS_AS(d.validate(), ArgumentError);
}
