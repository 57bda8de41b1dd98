#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace callout::cli {

struct SuiteResult {
  std::string name;
  std::vector<std::string> failures;
  double seconds = 0.0;
};

struct Suite {
  std::string name;
  std::string description;
  std::function<std::vector<std::string>(std::uint64_t seed)> run;
};

/// Property checks runnable from `validate`, in execution order.
const std::vector<Suite>& validation_suites();

}  // namespace callout::cli
