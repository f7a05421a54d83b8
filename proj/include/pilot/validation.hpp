// SPDX-License-Identifier: Apache-2.0

#ifndef PILOT_VALIDATION_HPP
#define PILOT_VALIDATION_HPP

#include "pilot/objective.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pilot {

struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    bool manual = false; // reported for inspection, never fails
    std::string detail;
    double seconds = 0.0;
    double budget_seconds = 0.0; // 0 means no runtime limit
};

struct ValidationOptions {
    std::uint64_t seed = 1;
    int threads = 1;
};

/// Problem on `grid` with random orthonormal rows of the given rank, prior
/// eigenvalues drawn from [0.5, 5] and the given alpha.
DesignProblem make_random_problem(const GridConfig& grid, int rank, int budget, double alpha, std::uint64_t seed);

CheckResult check_oracle_gap(const ValidationOptions& opts);
CheckResult check_incremental_updates(const ValidationOptions& opts);
CheckResult check_gradient(const ValidationOptions& opts);
CheckResult check_dependent_rounding(const ValidationOptions& opts);
CheckResult check_monte_carlo(const ValidationOptions& opts);
CheckResult check_lattice_ordering(const ValidationOptions& opts);
CheckResult check_pipeline_agreement(const ValidationOptions& opts);
CheckResult check_spreading_ordering(const ValidationOptions& opts);
CheckResult report_structure_trends(const ValidationOptions& opts);
CheckResult check_kronecker_spectrum(const ValidationOptions& opts);

using CheckFn = CheckResult (*)(const ValidationOptions&);
const std::vector<CheckFn>& all_checks();

/// Runs every check in order, invoking `on_result` after each.
std::vector<CheckResult> run_checks(const ValidationOptions& opts,
                                    const std::function<void(const CheckResult&)>& on_result = {});

std::string format_check_line(const CheckResult& r);

} // namespace pilot

#endif
