#pragma once

// Acceptance suite shared by the test binary and `loopphase validate`.

#include <string>
#include <vector>

namespace loopphase::acceptance {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  double seconds = 0.0;
  std::vector<Check> checks;
};

std::vector<int> criterion_ids();
std::string criterion_title(int id);

/// Runs one criterion. Exceptions inside a criterion are reported as a failed check.
CriterionResult run_criterion(int id, unsigned jobs = 0);

/// "PASS  3  weak-probe validity  (0.02 s)" followed by one indented line per check.
std::string format_result(const CriterionResult& result, bool verbose = true);

} // namespace loopphase::acceptance
