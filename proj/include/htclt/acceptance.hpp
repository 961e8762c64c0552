#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace htclt {

enum class Verdict { Pass, Fail, Warn, Skip };

std::string to_string(Verdict v);

struct CriterionResult {
  int id = 0;
  std::string name;
  Verdict verdict = Verdict::Fail;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> metrics;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240601;
  int threads = 0;
  bool long_running = true;   // criterion 10
  std::string dump_dir = ".";  // diagnostics for downgraded criteria
  std::set<int> only;          // empty: all
};

inline constexpr int kCriterionCount = 11;

CriterionResult run_criterion(int id, const AcceptanceOptions& opts);

/// Runs the selected criteria in order, reporting each as it finishes.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& opts,
    const std::function<void(const CriterionResult&)>& on_result = {});

/// One line, e.g. "[PASS] 1 semicircle closure (0.4 s): max |s - 1/(z-s)| = 3e-13".
std::string format_line(const CriterionResult& r);

/// JSON summary of the results.
std::string results_json(const std::vector<CriterionResult>& results);

}  // namespace htclt
