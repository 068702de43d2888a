#include <cstdio>

#include "sgdwr/checks.hpp"

int main() {
  int failed = 0;
  for (int i = 1; i <= 10; ++i) {
    const sgdwr::CheckResult r = sgdwr::acceptance_criterion(i);
    failed += !r.pass;
    std::printf("criterion %d %s: %s (%.2f s) |%s\n", i, r.pass ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed ? 1 : 0;
}
