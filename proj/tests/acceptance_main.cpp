// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance_suite                run every criterion
//   acceptance_suite --criterion N  run one criterion (exit 1 on failure)

#include "loopphase/acceptance.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

int main(int argc, char** argv) {
  using namespace loopphase::acceptance;
  std::vector<int> ids = criterion_ids();
  bool quiet = false;
  for (int k = 1; k < argc; ++k) {
    const std::string arg = argv[k];
    if (arg == "--criterion" && k + 1 < argc) {
      ids = {std::atoi(argv[++k])};
    } else if (arg == "--quiet") {
      quiet = true;
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N] [--quiet]\n", argv[0]);
      return 2;
    }
  }
  int failed = 0;
  for (int id : ids) {
    const auto result = run_criterion(id);
    std::fputs(format_result(result, !quiet).c_str(), stdout);
    std::fflush(stdout);
    if (!result.passed) ++failed;
  }
  if (ids.size() > 1) std::printf("%zu criteria, %d failed\n", ids.size(), failed);
  return failed == 0 ? 0 : 1;
}
