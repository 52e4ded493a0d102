#include "cvgrad/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cvgrad/baselines.hpp"
#include "cvgrad/cvgm.hpp"
#include "cvgrad/dataset.hpp"
#include "cvgrad/errors.hpp"
#include "cvgrad/gradcheck.hpp"
#include "cvgrad/io.hpp"
#include "cvgrad/kernel.hpp"
#include "cvgrad/learners.hpp"
#include "cvgrad/problems.hpp"
#include "cvgrad/rng.hpp"

namespace cvgrad {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void write_summary(const json& summary, const std::filesystem::path& out_dir) {
  std::ofstream out(out_dir / "summary.json");
  if (!out) throw ArgumentError("cannot write summary.json in " + out_dir.string());
  out << summary.dump(2) << '\n';
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ArgumentError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ArgumentError("config line " + std::to_string(lineno) + ": empty key");
    cfg.set(key, value);
  }
  return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

bool ExperimentConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ArgumentError("config: '" + key + "' is not a number: " + it->second);
  }
}

int ExperimentConfig::get_int(const std::string& key, int fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw ArgumentError("config: '" + key + "' is not an integer: " + it->second);
  }
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw ArgumentError("config: '" + key + "' is not an unsigned integer: " + it->second);
  }
}

std::string ExperimentConfig::get_string(const std::string& key,
                                         const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ArgumentError("config: '" + key + "' must be true/false");
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& key,
                                                std::vector<int> fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<int> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ArgumentError("config: '" + key + "' has a non-integer entry: " + item);
    }
  }
  return out;
}

std::vector<std::string> ExperimentConfig::get_string_list(
    const std::string& key, std::vector<std::string> fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<std::string> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void ExperimentConfig::require_known_keys(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : entries_) {
    (void)value;
    bool ok = false;
    for (const auto& k : known)
      if (k == key) {
        ok = true;
        break;
      }
    if (!ok) throw ArgumentError("config: unknown key '" + key + "'");
  }
}

// ---------------------------------------------------------------------------
// Synthetic regression: CVGM vs exhaustive vs random search.
// ---------------------------------------------------------------------------

ExperimentResult run_regress(const ExperimentConfig& cfg, std::uint64_t seed,
                             const std::filesystem::path& out_dir) {
  cfg.require_known_keys({"N", "n", "n_informative", "noise_std", "test_N", "K", "p",
                          "step_size", "iters", "lambda1_init", "lambda2_init", "search_lo",
                          "search_hi", "grid_resolution", "budget", "threads", "stratified"});
  const Index N = cfg.get_int("N", 30);
  const Index n = cfg.get_int("n", 10);
  const Index n_informative = cfg.get_int("n_informative", 8);
  const double noise_std = cfg.get_double("noise_std", 100.0);
  const Index test_N = cfg.get_int("test_N", 1000);
  const int K = cfg.get_int("K", 128);
  const double p = cfg.get_double("p", 0.95);
  const double step_size = cfg.get_double("step_size", 2e-4);
  const int iters = cfg.get_int("iters", 100);
  const double l1_init = cfg.get_double("lambda1_init", 1e-2);
  const double l2_init = cfg.get_double("lambda2_init", 1e-4);
  const double search_lo = cfg.get_double("search_lo", 1e-4);
  const double search_hi = cfg.get_double("search_hi", 1e-1);
  const int grid_resolution = cfg.get_int("grid_resolution", 10);
  const int budget = cfg.get_int("budget", 100);
  const int threads = cfg.get_int("threads", 0);
  const SplitMode mode =
      cfg.get_bool("stratified", false) ? SplitMode::stratified : SplitMode::independent;

  Stopwatch watch;
  std::filesystem::create_directories(out_dir);

  // One draw of (coef, X, noise) over train+test rows keeps the ground-truth
  // coefficients shared between the two sets.
  const auto sample =
      make_regression(N + test_N, n, n_informative, noise_std, Rng::derive(seed, 100));
  std::vector<Index> train_rows, test_rows;
  for (Index i = 0; i < N; ++i) train_rows.push_back(i);
  for (Index i = N; i < N + test_N; ++i) test_rows.push_back(i);
  const Dataset train = subset(sample.data, train_rows);
  const Dataset test = subset(sample.data, test_rows);

  const std::uint64_t split_seed = Rng::derive(seed, 101);
  const auto splits = sample_splits(N, K, p, split_seed, mode);

  ElasticNetCvProblem problem;
  CvEvaluator evaluator(problem, train, splits, threads);

  CvgmConfig run_cfg;
  run_cfg.K = K;
  run_cfg.p = p;
  run_cfg.step_size = step_size;
  run_cfg.max_iters = iters;
  run_cfg.seed = split_seed;
  run_cfg.threads = threads;
  run_cfg.split_mode = mode;
  Vector lo(2), hi(2);
  lo << 0.0, ElasticNetHyper::kLambda2Min;
  hi << std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity();
  run_cfg.projection = Projection::box(lo, hi);

  Vector alpha0(2);
  alpha0 << l1_init, l2_init;
  const CvgmResult cvgm = cvgm_run(problem, train, run_cfg, alpha0, &test);
  cvgm.trace.save_csv(out_dir / "cvgm_trace.csv");

  SearchSpace space;
  space.lo = Vector::Constant(2, search_lo);
  space.hi = Vector::Constant(2, search_hi);
  space.resolution = {grid_resolution, grid_resolution};
  const SearchResult grid = grid_search(evaluator, space, budget);
  grid.save_csv(out_dir / "grid_log.csv");
  const SearchResult random = random_search(evaluator, space, budget, Rng::derive(seed, 102));
  random.save_csv(out_dir / "random_log.csv");

  auto method_json = [&](const Vector& alpha, double cv_loss) {
    const auto metrics = problem.test_metrics(train, test, alpha);
    json j;
    j["alpha"] = {alpha[0], alpha[1]};
    j["final_cv_loss"] = cv_loss;
    for (const auto& [name, value] : metrics) j[name] = value;
    j["test_loss_over_noise_var"] =
        noise_std > 0 ? metrics.front().second / (noise_std * noise_std) : 0.0;
    return j;
  };

  json summary;
  summary["experiment"] = "regress";
  summary["seed"] = seed;
  summary["config"] = {{"N", N},
                       {"n", n},
                       {"n_informative", n_informative},
                       {"noise_std", noise_std},
                       {"test_N", test_N},
                       {"K", K},
                       {"p", p},
                       {"step_size", step_size},
                       {"iters", iters},
                       {"lambda1_init", l1_init},
                       {"lambda2_init", l2_init},
                       {"search_lo", search_lo},
                       {"search_hi", search_hi},
                       {"grid_resolution", grid_resolution},
                       {"budget", budget},
                       {"threads", threads},
                       {"stratified", mode == SplitMode::stratified}};
  summary["methods"]["cvgm"] = method_json(cvgm.alpha_star, cvgm.trace.records.back().cv_loss);
  summary["methods"]["grid"] = method_json(grid.best_alpha, grid.best_loss);
  summary["methods"]["random"] = method_json(random.best_alpha, random.best_loss);
  summary["wall_time_seconds"] = watch.seconds();
  write_summary(summary, out_dir);

  ExperimentResult res;
  res.summary_json = summary.dump(2);
  return res;
}

// ---------------------------------------------------------------------------
// Kernel-learning classification experiments (rings, xor).
// ---------------------------------------------------------------------------

namespace {

struct KernelExperimentSetup {
  std::string name;
  Dataset train, test;
  KernelArch arch;
  double C;
  int K;
  double p;
  double step_size;
  int iters;
  int threads;
  std::vector<int> checkpoint_iters;
  std::string resume;
  double bayes_reference = 0;
  json extra_config;
};

ExperimentResult run_kernel_experiment(const KernelExperimentSetup& s, std::uint64_t seed,
                                       const std::filesystem::path& out_dir) {
  Stopwatch watch;
  std::filesystem::create_directories(out_dir);

  KernelLogisticCvProblem problem(s.arch, s.C);

  Vector alpha0;
  if (!s.resume.empty()) {
    alpha0 = load_flat_vector(s.resume);
    if (alpha0.size() != problem.alpha_dim())
      throw ArgumentError("resume checkpoint does not match the architecture");
  } else {
    alpha0 = kernel_flatten(init_kernel(s.arch, Rng::derive(seed, 200)));
  }

  CvgmConfig run_cfg;
  run_cfg.K = s.K;
  run_cfg.p = s.p;
  run_cfg.step_size = s.step_size;
  run_cfg.max_iters = s.iters;
  run_cfg.seed = Rng::derive(seed, 201);
  run_cfg.threads = s.threads;
  run_cfg.projection = Projection::none();

  // Checkpoints: kernel weights, the 2-D embedding of the test set, and the
  // fitted linear boundary in that space, at the requested iterations.
  auto observer = [&](const TraceRecord& r) {
    bool wanted = false;
    for (int k : s.checkpoint_iters)
      if (k == r.iter) wanted = true;
    if (!wanted) return;
    const std::string tag = std::to_string(r.iter);
    save_flat_vector(r.alpha, out_dir / ("kernel_iter" + tag + ".txt"));
    const KernelParams kp = kernel_unflatten(s.arch, r.alpha);
    const Matrix emb = kernel_forward(kp, s.test.features);
    CsvWriter w({"phi0", "phi1", "y"});
    for (Index i = 0; i < emb.rows(); ++i)
      w.add_row({emb(i, 0), emb(i, 1), s.test.targets[i]});
    w.save(out_dir / ("embedding_iter" + tag + ".csv"));
    const Matrix Vt = kernel_forward(kp, s.train.features);
    const FitResult fit = fit_logistic(Vt, s.train.targets, LogisticHyper{s.C});
    CsvWriter bw({"theta0", "theta1"});
    bw.add_row({fit.theta[0], fit.theta[1]});
    bw.save(out_dir / ("boundary_iter" + tag + ".csv"));
  };

  const CvgmResult result = cvgm_run(problem, s.train, run_cfg, alpha0, &s.test, observer);
  result.trace.save_csv(out_dir / "trace.csv");

  const auto final_metrics = problem.test_metrics(s.train, s.test, result.alpha_star);
  save_flat_vector(result.alpha_star, out_dir / "kernel_final.txt");

  json summary;
  summary["experiment"] = s.name;
  summary["seed"] = seed;
  summary["config"] = s.extra_config;
  summary["methods"]["cvgm"]["final_cv_loss"] = result.trace.records.back().cv_loss;
  for (const auto& [name, value] : final_metrics)
    summary["methods"]["cvgm"][name] = value;
  summary["initial_cv_loss"] = result.trace.records.front().cv_loss;
  for (const auto& [name, value] : result.trace.records.front().extra)
    summary["initial_" + name] = value;
  if (result.trace.records.front().test_loss)
    summary["initial_test_loss"] = *result.trace.records.front().test_loss;
  summary["bayes_reference_accuracy"] = s.bayes_reference;
  summary["wall_time_seconds"] = watch.seconds();
  write_summary(summary, out_dir);

  ExperimentResult res;
  res.summary_json = summary.dump(2);
  return res;
}

// End-to-end baseline for the sweep: the kernel architecture with a linear
// readout on top, all weights trained jointly by full-batch gradient descent
// on the soft-margin (binary cross-entropy) loss.
struct EndToEndNet {
  KernelParams kp;
  Vector readout;  // 2
};

EndToEndNet train_end_to_end(const Dataset& train, KernelArch arch, double step, int steps,
                             std::uint64_t seed) {
  EndToEndNet net;
  net.kp = init_kernel(arch, Rng::derive(seed, 301));
  Rng rng(Rng::derive(seed, 302));
  const double bound = 1.0 / std::sqrt(2.0);
  net.readout.resize(2);
  net.readout << rng.uniform(-bound, bound), rng.uniform(-bound, bound);

  const Index N = train.size();
  for (int it = 0; it < steps; ++it) {
    KernelTape tape;
    const Matrix V = kernel_forward(net.kp, train.features, &tape);
    const Vector logits = V * net.readout;
    const Vector dlogit = loss_softmargin_dyhat(logits, train.targets) / static_cast<double>(N);
    const Vector dreadout = V.transpose() * dlogit;
    const Matrix dV = dlogit * net.readout.transpose();
    const Vector dkernel = kernel_backward(net.kp, tape, dV);
    net.kp = kernel_unflatten(arch, kernel_flatten(net.kp) - step * dkernel);
    net.readout -= step * dreadout;
  }
  return net;
}

}  // namespace

ExperimentResult run_rings(const ExperimentConfig& cfg, std::uint64_t seed,
                           const std::filesystem::path& out_dir, bool sweep) {
  cfg.require_known_keys({"N", "test_N", "r1", "r2", "radial_std", "C", "K", "p", "step_size",
                          "iters", "checkpoint_iters", "threads", "resume", "sweep_sizes",
                          "sweep_seeds", "nn_step", "nn_iters"});
  const Index N = cfg.get_int("N", 60);
  const Index test_N = cfg.get_int("test_N", 1000);
  const double r1 = cfg.get_double("r1", 1.0);
  const double r2 = cfg.get_double("r2", 2.0);
  const double radial_std = cfg.get_double("radial_std", 0.4);
  const double C = cfg.get_double("C", 10.0);
  const int K = cfg.get_int("K", 256);
  const double p = cfg.get_double("p", 0.95);
  const double step_size = cfg.get_double("step_size", 1e-1);
  const int iters = cfg.get_int("iters", 100);
  const int threads = cfg.get_int("threads", 0);

  if (sweep) {
    Stopwatch watch;
    std::filesystem::create_directories(out_dir);
    const std::vector<int> sizes = cfg.get_int_list("sweep_sizes", {8, 16, 30, 60, 100, 200});
    const int sweep_seeds = cfg.get_int("sweep_seeds", 25);
    const double nn_step = cfg.get_double("nn_step", 1e-2);
    const int nn_iters = cfg.get_int("nn_iters", 100);

    CsvWriter w({"size", "seed_index", "method", "test_accuracy", "test_softmargin"});
    json means;
    for (int size : sizes) {
      double acc_cvgm = 0, acc_nn = 0, acc_logistic = 0;
      for (int rep = 0; rep < sweep_seeds; ++rep) {
        const std::uint64_t rep_seed = Rng::derive(seed, 400 + 1000 * rep + size);
        const Dataset train = make_rings(size, r1, r2, radial_std, Rng::derive(rep_seed, 1));
        const Dataset test = make_rings(test_N, r1, r2, radial_std, Rng::derive(rep_seed, 2));

        KernelLogisticCvProblem problem(KernelArch::one_layer, C);
        CvgmConfig run_cfg;
        run_cfg.K = K;
        run_cfg.p = p;
        run_cfg.step_size = step_size;
        run_cfg.max_iters = iters;
        run_cfg.seed = Rng::derive(rep_seed, 3);
        run_cfg.threads = threads;
        run_cfg.track_test = false;
        const Vector a0 = kernel_flatten(init_kernel(KernelArch::one_layer, Rng::derive(rep_seed, 4)));
        const CvgmResult res = cvgm_run(problem, train, run_cfg, a0, nullptr);
        const auto m_cvgm = problem.test_metrics(train, test, res.alpha_star);
        w.add_row({static_cast<double>(size), static_cast<double>(rep), 0,
                   m_cvgm[1].second, m_cvgm[0].second});
        acc_cvgm += m_cvgm[1].second;

        const EndToEndNet net =
            train_end_to_end(train, KernelArch::one_layer, nn_step, nn_iters, rep_seed);
        const Vector logits =
            kernel_forward(net.kp, test.features) * net.readout;
        const double nn_acc = 1.0 - loss_01(logits, test.targets);
        w.add_row({static_cast<double>(size), static_cast<double>(rep), 1, nn_acc,
                   loss_softmargin(logits, test.targets)});
        acc_nn += nn_acc;

        const FitResult lr = fit_logistic(train.features, train.targets, LogisticHyper{C});
        const Vector yhat = test.features * lr.theta;
        const double lr_acc = 1.0 - loss_01(yhat, test.targets);
        w.add_row({static_cast<double>(size), static_cast<double>(rep), 2, lr_acc,
                   loss_softmargin(yhat, test.targets)});
        acc_logistic += lr_acc;
      }
      means[std::to_string(size)] = {{"cvgm", acc_cvgm / sweep_seeds},
                                     {"nn", acc_nn / sweep_seeds},
                                     {"logistic", acc_logistic / sweep_seeds}};
    }
    w.save(out_dir / "sweep.csv");
    json summary;
    summary["experiment"] = "rings_sweep";
    summary["seed"] = seed;
    summary["method_codes"] = {{"0", "cvgm"}, {"1", "nn"}, {"2", "logistic"}};
    summary["mean_test_accuracy"] = means;
    summary["wall_time_seconds"] = watch.seconds();
    write_summary(summary, out_dir);
    ExperimentResult res;
    res.summary_json = summary.dump(2);
    return res;
  }

  KernelExperimentSetup s;
  s.name = "rings";
  s.train = make_rings(N, r1, r2, radial_std, Rng::derive(seed, 1));
  s.test = make_rings(test_N, r1, r2, radial_std, Rng::derive(seed, 2));
  s.arch = KernelArch::one_layer;
  s.C = C;
  s.K = K;
  s.p = p;
  s.step_size = step_size;
  s.iters = iters;
  s.threads = threads;
  s.checkpoint_iters = cfg.get_int_list("checkpoint_iters", {1, 10, 20, 100});
  s.resume = cfg.get_string("resume", "");
  s.bayes_reference = ring_threshold_accuracy(s.test, (r1 + r2) / 2.0 + 0.0);
  s.extra_config = {{"N", N},     {"test_N", test_N}, {"r1", r1},
                    {"r2", r2},   {"radial_std", radial_std}, {"C", C},
                    {"K", K},     {"p", p},           {"step_size", step_size},
                    {"iters", iters}, {"threads", threads}};
  return run_kernel_experiment(s, seed, out_dir);
}

ExperimentResult run_xor(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::filesystem::path& out_dir) {
  cfg.require_known_keys(
      {"N", "test_N", "C", "K", "p", "step_size", "iters", "checkpoint_iters", "threads",
       "resume"});
  const Index N = cfg.get_int("N", 100);
  const Index test_N = cfg.get_int("test_N", 1000);
  const double C = cfg.get_double("C", 10.0);
  const int K = cfg.get_int("K", 256);
  const double p = cfg.get_double("p", 0.95);
  const double step_size = cfg.get_double("step_size", 1e-1);
  const int iters = cfg.get_int("iters", 100);
  const int threads = cfg.get_int("threads", 0);

  KernelExperimentSetup s;
  s.name = "xor";
  s.train = make_xor(N, Rng::derive(seed, 1));
  s.test = make_xor(test_N, Rng::derive(seed, 2));
  s.arch = KernelArch::two_layer;
  s.C = C;
  s.K = K;
  s.p = p;
  s.step_size = step_size;
  s.iters = iters;
  s.threads = threads;
  s.checkpoint_iters = cfg.get_int_list("checkpoint_iters", {1, 2, 5, 50});
  s.resume = cfg.get_string("resume", "");
  s.bayes_reference = xor_rule_accuracy(s.test);
  s.extra_config = {{"N", N}, {"test_N", test_N}, {"C", C},       {"K", K},
                    {"p", p}, {"step_size", step_size}, {"iters", iters}, {"threads", threads},
                    {"analytic_bayes_accuracy", xor_bayes_accuracy()}};
  return run_kernel_experiment(s, seed, out_dir);
}

ExperimentResult run_gradcheck(const ExperimentConfig& cfg, std::uint64_t seed,
                               const std::filesystem::path& out_dir) {
  cfg.require_known_keys({"checks", "selftest_corrupt"});
  const std::vector<std::string> default_checks = {
      "qp", "logistic", "elastic_net", "svm", "loss_combination", "kernel", "cv"};
  std::vector<std::string> checks = cfg.get_string_list("checks", default_checks);
  const bool corrupt = cfg.get_bool("selftest_corrupt", false);

  Stopwatch watch;
  std::filesystem::create_directories(out_dir);
  const GradCheckReport report = run_gradcheck(checks, seed, corrupt);

  json summary;
  summary["experiment"] = "gradcheck";
  summary["seed"] = seed;
  summary["selftest_corrupt"] = corrupt;
  summary["checks"] = json::array();
  for (const auto& e : report.entries) {
    summary["checks"].push_back({{"name", e.name},
                                 {"max_rel_error", e.max_rel_error},
                                 {"threshold", e.threshold},
                                 {"instances", e.instances},
                                 {"skipped", e.skipped},
                                 {"passed", e.passed}});
  }
  summary["all_passed"] = report.all_passed();
  summary["wall_time_seconds"] = watch.seconds();
  {
    std::ofstream out(out_dir / "gradcheck.json");
    out << summary.dump(2) << '\n';
  }
  write_summary(summary, out_dir);

  ExperimentResult res;
  res.exit_code = report.all_passed() ? 0 : 3;
  res.summary_json = summary.dump(2);
  return res;
}

}  // namespace cvgrad
