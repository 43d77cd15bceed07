#pragma once

#include <string>
#include <vector>

namespace fedsim::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

CheckResult norm_inflation_suite();          // crafted-update norms, 1000 trials
CheckResult exact_recovery_suite();          // ideal-condition recovery, 100 trials
CheckResult aggregate_error_bound_suite();   // variance bound audit, 200 trials
CheckResult k_recovery_suite();              // participant-count estimation
CheckResult beta_bisection_suite();          // quadratic vs bisection oracle, 500 triples
CheckResult end_to_end_suite();              // selfish impact + mitigation, 5 seeds
CheckResult no_selfish_no_harm_suite();      // robust aggregation on honest rounds
CheckResult transcription_equivalence_suite();  // straight-line re-implementation
CheckResult determinism_suite();             // byte-identical outputs, threads 1 and 8
CheckResult gradient_check_suite();          // finite-difference oracle, 100 instances

/// All suites in criterion order. When include_slow is false the end-to-end,
/// no-harm and determinism suites (the ones that run whole experiments) are
/// skipped.
std::vector<CheckResult> run_all(bool include_slow);

}  // namespace fedsim::checks
