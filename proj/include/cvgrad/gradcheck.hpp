#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cvgrad {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0;
  double threshold = 0;
  int instances = 0;
  int skipped = 0;  // degenerate instances (unstable active set) regenerated
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool all_passed() const;
};

// Analytic-vs-central-finite-difference checks for every differentiation
// path: QP directional derivatives, each learner's jac_hyper (and the
// logistic input Jacobian), kernel backward, and the end-to-end elastic-net
// cross-validation gradient. `checks` selects by name from
// {qp, logistic, elastic_net, svm, loss_combination, kernel, cv};
// an empty list produces an empty passing report.
// corrupt_hook injects an error into the first logistic check (harness
// self-test).
GradCheckReport run_gradcheck(const std::vector<std::string>& checks, std::uint64_t seed,
                              bool corrupt_hook = false);

}  // namespace cvgrad
