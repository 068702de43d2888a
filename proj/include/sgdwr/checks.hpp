#pragma once

#include <functional>
#include <string>
#include <vector>

namespace sgdwr {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

// The ten acceptance criteria; i in 1..10.
CheckResult acceptance_criterion(int i);
const char* acceptance_title(int i);

// Every module invariant plus gradient/finite-difference and determinism checks.
// on_result is called as each check finishes.
std::vector<CheckResult> validation_suite(const std::function<void(const CheckResult&)>& on_result = {});

}  // namespace sgdwr
