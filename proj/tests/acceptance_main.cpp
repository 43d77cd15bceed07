// Acceptance suite: runs every oracle/property check at full strength and
// prints one pass/fail line per criterion.

#include <cstdio>

#include "fedsim/checks.hpp"

int main() {
    const std::vector<fedsim::checks::CheckResult> results =
        fedsim::checks::run_all(/*include_slow=*/true);
    int failures = 0;
    for (size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::printf("[%s] %2zu. %s (%.2fs) — %s\n", r.passed ? "PASS" : "FAIL", i + 1,
                    r.name.c_str(), r.seconds, r.detail.c_str());
        if (!r.passed) ++failures;
    }
    std::printf("%zu/%zu criteria passed\n", results.size() - failures, results.size());
    return failures == 0 ? 0 : 1;
}
