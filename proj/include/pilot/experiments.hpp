// SPDX-License-Identifier: Apache-2.0

#ifndef PILOT_EXPERIMENTS_HPP
#define PILOT_EXPERIMENTS_HPP

#include "pilot/config.hpp"
#include "pilot/error.hpp"
#include "pilot/pipeline.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pilot {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_invalid_config = 2, exit_io = 3 };

int exit_code_for(Errc code) noexcept;

/// Command-line values that override the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<int> threads;
    std::vector<Method> methods;
};

void apply_overrides(ExperimentConfig& cfg, const Overrides& o);

/// Result of one method on one problem. `error` is set instead of `report`
/// when the method could not run (no lattice, exhaustive guard, ...).
struct MethodOutcome {
    Method method = Method::greedy;
    std::optional<DesignReport> report;
    std::optional<RelaxationResult> relaxation; // fractional only
    std::vector<RoundingDraw> draws;            // relax+round variants only
    std::optional<Error> error;
};

/// Runs `methods` on one problem. The relaxation and greedy pipelines are
/// shared between the methods that need them.
std::vector<MethodOutcome> run_methods(const DesignProblem& problem, const std::vector<Method>& methods,
                                       const ExperimentConfig& cfg, std::uint64_t seed);

/// ASCII panel: one row per subcarrier, one column per symbol; 'X' pilot, '.' data.
std::string render_pattern(const PilotPattern& pattern, const std::string& title, double mse);
/// Fractional weights as digits 1-9 (tenths), 'X' for ~1 and '.' for ~0.
std::string render_allocation(const Eigen::VectorXd& weights, const GridConfig& grid, const std::string& title,
                              double mse);

nlohmann::json pattern_to_json(const PilotPattern& pattern);
/// Reads the {M, N, indices} part of a pattern file.
PilotPattern pattern_from_json(const nlohmann::json& j);
PilotPattern load_pattern_json(const std::string& path);

/// File stem for a method ("relax+round+swap" -> "relax_round_swap").
std::string method_slug(Method m);

int cmd_design(const ExperimentConfig& cfg, std::ostream& log);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);
int cmd_structure(const ExperimentConfig& cfg, std::ostream& log);
int cmd_validate(const ExperimentConfig& cfg, std::ostream& log);

} // namespace pilot

#endif
