#pragma once

#include <functional>
#include <string>
#include <vector>

namespace zenochem {

struct CheckResult {
  bool passed = false;
  std::string detail;
};

// One end-to-end acceptance property with its tolerance baked in.
struct AcceptanceCheck {
  int id = 0;
  std::string name;
  std::function<CheckResult()> run;
};

// The full invariant/oracle suite, in id order (1..10).
std::vector<AcceptanceCheck> acceptance_checks();

}  // namespace zenochem
