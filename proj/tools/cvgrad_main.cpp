#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cvgrad/errors.hpp"
#include "cvgrad/experiments.hpp"

namespace {

int dispatch(const std::string& command, const cvgrad::ExperimentConfig& cfg,
             std::uint64_t seed, const std::string& out_dir, bool sweep) {
  cvgrad::ExperimentResult result;
  if (command == "regress") {
    result = cvgrad::run_regress(cfg, seed, out_dir);
  } else if (command == "rings") {
    result = cvgrad::run_rings(cfg, seed, out_dir, sweep);
  } else if (command == "xor") {
    result = cvgrad::run_xor(cfg, seed, out_dir);
  } else {
    result = cvgrad::run_gradcheck(cfg, seed, out_dir);
  }
  std::cout << result.summary_json << std::endl;
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cvgrad: gradient-based cross-validation hyperparameter optimization"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool sweep = false;

  for (const std::string name : {"regress", "rings", "xor", "gradcheck"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--seed", seed, "64-bit experiment seed");
    sub->add_option("--out", out_dir, "output directory");
    if (name == "rings") sub->add_flag("--sweep", sweep, "dataset-size comparison sweep");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    cvgrad::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = cvgrad::ExperimentConfig::parse_file(config_path);
    return dispatch(command, cfg, seed, out_dir, sweep);
  } catch (const cvgrad::ArgumentError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}
