#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cvgrad {

// Flat key = value configuration with typed accessors. Unknown keys are
// rejected against the owning experiment's key table; every key has a
// documented default (the paper-configuration value where one exists).
class ExperimentConfig {
 public:
  ExperimentConfig() = default;
  static ExperimentConfig parse_file(const std::filesystem::path& path);
  static ExperimentConfig parse_text(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;
  std::vector<std::string> get_string_list(const std::string& key,
                                           std::vector<std::string> fallback) const;

  void require_known_keys(const std::vector<std::string>& known) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

struct ExperimentResult {
  int exit_code = 0;                // 0 ok, 1 config, 2 solver, 3 gradcheck
  std::string summary_json;         // also written to <out>/summary.json
};

// Synthetic regression: CVGM vs grid vs random search on the same data and
// splits; writes cvgm_trace.csv, grid_log.csv, random_log.csv, summary.json.
ExperimentResult run_regress(const ExperimentConfig& cfg, std::uint64_t seed,
                             const std::filesystem::path& out_dir);

// Two-rings classification with a learned one-layer kernel; writes trace.csv,
// kernel checkpoints and test-set embeddings at the checkpoint iterations,
// summary.json. With sweep=true runs the dataset-size comparison
// (CVGM kernel vs end-to-end network vs plain logistic) into sweep.csv.
ExperimentResult run_rings(const ExperimentConfig& cfg, std::uint64_t seed,
                           const std::filesystem::path& out_dir, bool sweep = false);

// XOR classification with the two-layer kernel; same outputs as run_rings.
ExperimentResult run_xor(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::filesystem::path& out_dir);

// Gradient-check battery; writes gradcheck.json. Exit code 3 on any failure.
ExperimentResult run_gradcheck(const ExperimentConfig& cfg, std::uint64_t seed,
                               const std::filesystem::path& out_dir);

}  // namespace cvgrad
