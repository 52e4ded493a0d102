#include "cvgrad/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cvgrad/errors.hpp"
#include "cvgrad/io.hpp"
#include "cvgrad/rng.hpp"

namespace cvgrad {

void Dataset::validate() const {
  if (features.rows() < 1 || features.cols() < 1)
    throw ArgumentError("dataset needs N >= 1 and n >= 1");
  if (targets.size() != features.rows())
    throw ArgumentError("targets length must match feature rows");
  if (!features.allFinite() || !targets.allFinite())
    throw ArgumentError("dataset contains non-finite values");
  if (task == Task::classification) {
    for (Index i = 0; i < targets.size(); ++i)
      if (targets[i] != 1.0 && targets[i] != -1.0)
        throw ArgumentError("classification targets must be -1 or +1");
  }
}

RegressionSample make_regression(Index N, Index n, Index n_informative, double noise_std,
                                 std::uint64_t seed) {
  if (N < 1 || n < 1) throw ArgumentError("make_regression: N and n must be >= 1");
  if (n_informative < 0 || n_informative > n)
    throw ArgumentError("make_regression: need 0 <= n_informative <= n");
  if (noise_std < 0) throw ArgumentError("make_regression: noise_std must be >= 0");

  Rng rng(seed);
  Vector coef = Vector::Zero(n);
  for (Index j = 0; j < n_informative; ++j) coef[j] = 100.0 * rng.normal();

  Matrix X(N, n);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < n; ++j) X(i, j) = rng.normal();

  Vector y = X * coef;
  for (Index i = 0; i < N; ++i) y[i] += noise_std * rng.normal();

  Dataset d{std::move(X), std::move(y), Task::regression};
  d.validate();
  return {std::move(d), std::move(coef)};
}

Dataset make_rings(Index N, double r1, double r2, double radial_std, std::uint64_t seed) {
  if (N < 2 || N % 2 != 0) throw ArgumentError("make_rings: N must be even and >= 2");
  if (!(radial_std > 0)) throw ArgumentError("make_rings: radial_std must be > 0");

  Rng rng(seed);
  Matrix X(N, 2);
  Vector y(N);
  const Index half = N / 2;
  for (Index i = 0; i < N; ++i) {
    const bool first = i < half;
    const double r = rng.normal(first ? r1 : r2, radial_std);
    const double angle = rng.uniform(-M_PI, M_PI);
    X(i, 0) = r * std::cos(angle);
    X(i, 1) = r * std::sin(angle);
    y[i] = first ? 1.0 : -1.0;
  }
  Dataset d{std::move(X), std::move(y), Task::classification};
  d.validate();
  return d;
}

namespace {

struct Box {
  double x_lo, x_hi, y_lo, y_hi;
};

// Class +1: anti-diagonal boxes; class -1: diagonal boxes.
constexpr Box kXorPos[2] = {{-3.0, 0.6, -0.6, 3.0}, {-0.6, 3.0, -3.0, 0.6}};
constexpr Box kXorNeg[2] = {{-3.0, 0.6, -3.0, 0.6}, {-0.6, 3.0, -0.6, 3.0}};

}  // namespace

Dataset make_xor(Index N, std::uint64_t seed) {
  if (N < 2 || N % 2 != 0) throw ArgumentError("make_xor: N must be even and >= 2");

  Rng rng(seed);
  Matrix X(N, 2);
  Vector y(N);
  const Index half = N / 2;
  for (Index i = 0; i < N; ++i) {
    const bool pos = i < half;
    const Box& box = pos ? kXorPos[rng.uniform() < 0.5 ? 0 : 1]
                         : kXorNeg[rng.uniform() < 0.5 ? 0 : 1];
    X(i, 0) = rng.uniform(box.x_lo, box.x_hi);
    X(i, 1) = rng.uniform(box.y_lo, box.y_hi);
    y[i] = pos ? 1.0 : -1.0;
  }
  Dataset d{std::move(X), std::move(y), Task::classification};
  d.validate();
  return d;
}

Normalizer fit_normalizer(const Dataset& d, const std::vector<Index>& idx) {
  if (idx.empty()) throw ArgumentError("fit_normalizer: index set must be nonempty");
  const Index n = d.dim();
  const double count = static_cast<double>(idx.size());
  Vector means = Vector::Zero(n);
  for (Index i : idx) means += d.features.row(i).transpose();
  means /= count;
  Vector vars = Vector::Zero(n);
  for (Index i : idx) {
    Vector c = d.features.row(i).transpose() - means;
    vars += c.cwiseProduct(c);
  }
  vars /= count;  // population std
  Vector stds = vars.cwiseSqrt().cwiseMax(Normalizer::kEpsStd);
  return Normalizer{std::move(means), std::move(stds)};
}

Dataset apply_normalizer(const Normalizer& nrm, const Dataset& d) {
  Dataset out = d;
  out.features = (d.features.rowwise() - nrm.means.transpose()).array().rowwise() /
                 nrm.stds.transpose().array();
  return out;
}

std::vector<Split> sample_splits(Index N, int K, double p, std::uint64_t seed, SplitMode mode) {
  const Index train_size = static_cast<Index>(std::floor(p * static_cast<double>(N)));
  if (K < 1) throw ArgumentError("sample_splits: K must be >= 1");
  if (train_size < 1 || train_size > N - 1)
    throw ArgumentError("sample_splits: need 1 <= floor(p*N) <= N-1");

  Rng rng(seed);
  std::vector<Split> splits;
  splits.reserve(static_cast<std::size_t>(K));

  std::vector<Index> idx(static_cast<std::size_t>(N));

  if (mode == SplitMode::independent) {
    for (int k = 0; k < K; ++k) {
      std::iota(idx.begin(), idx.end(), Index{0});
      // Partial Fisher-Yates: first train_size entries are a uniform subset.
      for (Index i = 0; i < train_size; ++i) {
        const Index j = i + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(N - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      }
      Split s;
      s.train_idx.assign(idx.begin(), idx.begin() + train_size);
      s.val_idx.assign(idx.begin() + train_size, idx.end());
      std::sort(s.train_idx.begin(), s.train_idx.end());
      std::sort(s.val_idx.begin(), s.val_idx.end());
      splits.push_back(std::move(s));
    }
    return splits;
  }

  // Stratified: validation indices drawn round-robin from shuffled
  // permutations so every index appears in V_j with count differing by <= 1.
  const Index val_size = N - train_size;
  std::vector<Index> pool;
  std::size_t pool_pos = 0;
  auto refill = [&]() {
    pool.resize(static_cast<std::size_t>(N));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index i = N - 1; i > 0; --i) {
      const Index j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool_pos = 0;
  };
  refill();
  for (int k = 0; k < K; ++k) {
    Split s;
    std::vector<bool> in_val(static_cast<std::size_t>(N), false);
    while (static_cast<Index>(s.val_idx.size()) < val_size) {
      if (pool_pos == pool.size()) refill();
      const Index cand = pool[pool_pos++];
      if (!in_val[static_cast<std::size_t>(cand)]) {
        in_val[static_cast<std::size_t>(cand)] = true;
        s.val_idx.push_back(cand);
      }
    }
    for (Index i = 0; i < N; ++i)
      if (!in_val[static_cast<std::size_t>(i)]) s.train_idx.push_back(i);
    std::sort(s.val_idx.begin(), s.val_idx.end());
    splits.push_back(std::move(s));
  }
  return splits;
}

Dataset subset(const Dataset& d, const std::vector<Index>& idx) {
  Matrix X(static_cast<Index>(idx.size()), d.dim());
  Vector y(static_cast<Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    X.row(static_cast<Index>(r)) = d.features.row(idx[r]);
    y[static_cast<Index>(r)] = d.targets[idx[r]];
  }
  return Dataset{std::move(X), std::move(y), d.task};
}

double ring_threshold_accuracy(const Dataset& d, double radius) {
  Index correct = 0;
  for (Index i = 0; i < d.size(); ++i) {
    const double pred = d.features.row(i).norm() < radius ? 1.0 : -1.0;
    if (pred == d.targets[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.size());
}

double xor_rule_accuracy(const Dataset& d) {
  Index correct = 0;
  for (Index i = 0; i < d.size(); ++i) {
    const double pred = d.features(i, 0) * d.features(i, 1) < 0 ? 1.0 : -1.0;
    if (pred == d.targets[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.size());
}

double xor_bayes_accuracy() {
  // Partition the plane by the box edges at +/-0.6 and integrate the
  // per-class box-count densities cell by cell; the optimal rule takes the
  // larger count, so accuracy = sum area*max(nA,nB) / (2 * 2 * box_area).
  const double edges[4] = {-3.0, -0.6, 0.6, 3.0};
  auto covers = [](const Box& b, double x_lo, double x_hi, double y_lo, double y_hi) {
    return b.x_lo <= x_lo && x_hi <= b.x_hi && b.y_lo <= y_lo && y_hi <= b.y_hi;
  };
  const double box_area = (kXorPos[0].x_hi - kXorPos[0].x_lo) * (kXorPos[0].y_hi - kXorPos[0].y_lo);
  double total = 0;
  for (int cx = 0; cx < 3; ++cx) {
    for (int cy = 0; cy < 3; ++cy) {
      const double x_lo = edges[cx], x_hi = edges[cx + 1];
      const double y_lo = edges[cy], y_hi = edges[cy + 1];
      int n_pos = 0, n_neg = 0;
      for (const Box& b : kXorPos) n_pos += covers(b, x_lo, x_hi, y_lo, y_hi) ? 1 : 0;
      for (const Box& b : kXorNeg) n_neg += covers(b, x_lo, x_hi, y_lo, y_hi) ? 1 : 0;
      total += (x_hi - x_lo) * (y_hi - y_lo) * std::max(n_pos, n_neg);
    }
  }
  return total / (4.0 * box_area);
}

void save_dataset_csv(const Dataset& d, const std::filesystem::path& path) {
  std::vector<std::string> cols;
  for (Index j = 0; j < d.dim(); ++j) cols.push_back("x" + std::to_string(j));
  cols.push_back("y");
  CsvWriter w(std::move(cols));
  std::vector<double> row(static_cast<std::size_t>(d.dim()) + 1);
  for (Index i = 0; i < d.size(); ++i) {
    for (Index j = 0; j < d.dim(); ++j) row[static_cast<std::size_t>(j)] = d.features(i, j);
    row.back() = d.targets[i];
    w.add_row(row);
  }
  w.save(path);
}

Dataset load_dataset_csv(const std::filesystem::path& path, Task task) {
  CsvTable t = load_csv_table(path);
  if (t.columns.size() < 2 || t.columns.back() != "y")
    throw ArgumentError("dataset csv must end with a y column");
  Dataset d;
  d.features = t.values.leftCols(t.values.cols() - 1);
  d.targets = t.values.col(t.values.cols() - 1);
  d.task = task;
  d.validate();
  return d;
}

}  // namespace cvgrad
