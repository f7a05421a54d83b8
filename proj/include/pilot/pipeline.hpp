// SPDX-License-Identifier: Apache-2.0

#ifndef PILOT_PIPELINE_HPP
#define PILOT_PIPELINE_HPP

#include "pilot/optimizers.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace pilot {

struct PipelineOptions {
    bool relaxation = true;
    bool greedy = true;
    int roundings = 50;
    int max_swap_passes = 100;
    RelaxationOptions relaxation_options;
    std::uint64_t seed = 1;
};

/// One dependent-rounding draw and its refinement.
struct RoundingDraw {
    std::uint64_t seed = 0;
    double objective = 0.0;
    double swapped_objective = 0.0;
    int swap_iterations = 0;
};

struct PipelineResult {
    std::optional<RelaxationResult> relaxation;
    std::optional<DesignReport> relax_round;      // best rounded draw
    std::optional<DesignReport> relax_round_swap; // best refined draw
    std::vector<RoundingDraw> draws;
    std::optional<DesignReport> greedy;
    std::optional<DesignReport> greedy_swap;
};

/// Runs the two design pipelines: relaxation -> R roundings -> local swap (the
/// best refined draw is kept), and greedy -> local swap.
PipelineResult run_pipelines(const DesignProblem& problem, const PipelineOptions& opts);

/// Mean distance (in grid cells) from each pilot to its nearest other pilot;
/// empty for fewer than two pilots.
std::optional<double> mean_nearest_neighbor_distance(const PilotPattern& pattern);

} // namespace pilot

#endif
