// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
// Optional arguments restrict the run to the listed criterion ids.

#include <cstdlib>
#include <iostream>

#include "invgp/validation.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty()) ids = invgp::profile_criteria(invgp::Profile::full);

  const invgp::ValidationOptions opts;
  int failed = 0;
  double total = 0.0;
  for (int id : ids) {
    const auto r = invgp::run_criterion(id, opts);
    std::cout << invgp::format_line(r) << std::endl;
    failed += r.passed ? 0 : 1;
    total += r.seconds;
  }
  std::cout << (failed == 0 ? "ALL PASS" : "FAILURES: " + std::to_string(failed)) << " (" << ids.size()
            << " criteria, " << invgp::validation::sci(total) << " s)" << std::endl;
  return failed == 0 ? 0 : 1;
}
