// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "checks.hpp"

namespace {

struct Criterion {
  const char* name;
  std::function<std::string()> check;
  double budget_s;  // 0 = no runtime bound
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"metric_reconstruction", [] { return checks::metric_reconstruction(); }, 1.0},
      {"multiset_identities", [] { return checks::multiset_identities(1000); }, 1.0},
      {"end_to_end_determinism", [] { return checks::end_to_end_determinism(); }, 10.0},
      {"fault_injection", [] { return checks::fault_injection(); }, 0.0},
      {"raster_oracle_equivalence", [] { return checks::raster_oracle(200); }, 0.0},
      {"naming_protocol", [] { return checks::naming_protocol(1000); }, 0.0},
      {"react_parser_golden", [] { return checks::react_parser(); }, 0.0},
      {"mcnemar", [] { return checks::mcnemar_check(); }, 0.0},
      {"latency_rounds", [] { return checks::latency_check(); }, 0.0},
      {"segmentation_metrics", [] { return checks::segmentation_check(); }, 0.0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    std::string err;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      err = c.check();
    } catch (const std::exception& e) {
      err = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (err.empty() && c.budget_s > 0.0 && secs > c.budget_s) {
      err = fmt::format("took {:.2f}s, budget {:.0f}s", secs, c.budget_s);
    }
    if (err.empty()) {
      std::printf("PASS %s (%.3fs)\n", c.name, secs);
    } else {
      ++failed;
      std::printf("FAIL %s: %s\n", c.name, err.c_str());
    }
  }
  return failed == 0 ? 0 : 1;
}
