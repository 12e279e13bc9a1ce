#pragma once

// End-to-end acceptance suite: one pass/fail line per criterion, every
// tolerance fixed here rather than taken from the caller.

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace cssp {

struct AcceptanceOptions {
  /// Divide every round count by 100 (replicate counts are unchanged).
  bool quick = false;
  std::uint64_t seed = 20240611;
  /// Criteria to run; empty means all.
  std::set<int> only;
  /// Tamper with every generated trace (harness self-check).
  bool inject_failure = false;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
};

inline constexpr int kCriterionCount = 13;

/// Runs the selected criteria, printing one line per criterion to `out` as it
/// finishes and progress notes to `log` (may be null).
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& out,
                                            std::ostream* log = nullptr);

}  // namespace cssp
