#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace locality_lab {

struct SuiteOptions {
  bool quick = false;
  std::uint64_t seed = 7;
  // Result CSVs land here; created if missing.
  std::string out_dir = "suite_out";
  // Criterion ids to run; empty runs 1..11.
  std::vector<int> only;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  // Headline numbers, e.g. "21/21 pass, worst emp/bound 0.41".
  std::string summary;
  double seconds = 0.0;
  double time_limit = 0.0;
  // pass includes the runtime limit in full mode
  bool within_time = true;
  std::vector<std::string> outputs;
};

struct SuiteResult {
  std::vector<CriterionResult> criteria;
  bool all_pass = true;
};

constexpr int kNumCriteria = 11;

std::string criterion_name(int id);

// Runs one criterion, writing its CSV(s) into opts.out_dir.
CriterionResult run_criterion(int id, const SuiteOptions& opts);

// Runs the selected criteria in order and writes suite_summary.csv (no
// timings, so repeated runs compare byte for byte).
SuiteResult run_suite(const SuiteOptions& opts,
                      const std::function<void(const CriterionResult&)>& on_result = {});

}  // namespace locality_lab
