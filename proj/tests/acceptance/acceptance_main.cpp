// Acceptance battery at full size: one PASS/FAIL line per criterion.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include "locality_lab/suite.hpp"

int main(int argc, char** argv) {
  locality_lab::SuiteOptions opts;
  opts.quick = false;
  opts.seed = 7;
  opts.out_dir = argc > 1 ? argv[1] : "acceptance_out";
  int failures = 0;
  for (int id = 1; id <= locality_lab::kNumCriteria; ++id) {
    locality_lab::CriterionResult r;
    try {
      r = locality_lab::run_criterion(id, opts);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = locality_lab::criterion_name(id);
      r.pass = false;
      r.summary = std::string("exception: ") + e.what();
    }
    failures += !r.pass;
    std::string limit = r.time_limit > 0.0 ? " / limit " + std::to_string(static_cast<int>(r.time_limit)) + " s" : "";
    std::printf("%s criterion %2d (%s): %s [%.2f s%s]\n", r.pass ? "PASS" : "FAIL", id, r.name.c_str(),
                r.summary.c_str(), r.seconds, limit.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria pass\n", locality_lab::kNumCriteria - failures, locality_lab::kNumCriteria);
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
