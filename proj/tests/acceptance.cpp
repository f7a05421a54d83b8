// SPDX-License-Identifier: Apache-2.0

// Runs the automatic acceptance checks and prints one line per check.
// Usage: acceptance [seed]

#include "pilot/validation.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    pilot::ValidationOptions opts;
    if (argc > 1) opts.seed = std::stoull(argv[1]);

    int failed = 0;
    pilot::run_checks(opts, [&](const pilot::CheckResult& r) {
        std::cout << pilot::format_check_line(r) << std::endl;
        if (!r.manual && !r.passed) ++failed;
    });
    std::cout << (failed == 0 ? "acceptance: all automatic checks passed"
                              : "acceptance: " + std::to_string(failed) + " automatic check(s) failed")
              << std::endl;
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
