// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
//   acceptance            all criteria
//   acceptance --only N   criterion N (repeatable)
//   acceptance --fast     skip the long end-to-end criteria

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <vector>

#include "acceptance/criteria.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  bool fast = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) ids.push_back(std::atoi(argv[++i]));
    else if (std::strcmp(argv[i], "--fast") == 0) fast = true;
    else {
      std::cerr << "usage: acceptance [--fast] [--only N]...\n";
      return 1;
    }
  }
  if (ids.empty())
    for (int id : flora::acceptance::criterion_ids())
      if (!fast || !flora::acceptance::is_slow(id)) ids.push_back(id);
  int failed = 0;
  for (int id : ids) {
    const auto r = flora::acceptance::run_criterion(id);
    std::cout << flora::acceptance::format(r) << std::endl;
    failed += r.passed ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
