#pragma once

#include <string>
#include <vector>

namespace flora::acceptance {

struct Result {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;
};

std::vector<int> criterion_ids();
// End-to-end criteria that take minutes.
bool is_slow(int id);
// Never throws; an exception inside a criterion is reported as a failure.
Result run_criterion(int id);
std::string format(const Result& r);

}  // namespace flora::acceptance
