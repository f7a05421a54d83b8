// SPDX-License-Identifier: Apache-2.0

#include "pilot/pipeline.hpp"

#include "pilot/rng.hpp"

#include <cmath>
#include <limits>

namespace pilot {

PipelineResult run_pipelines(const DesignProblem& problem, const PipelineOptions& opts) {
    using Clock = std::chrono::steady_clock;
    PipelineResult out;

    if (opts.relaxation) {
        const auto start = Clock::now();
        out.relaxation = solve_relaxation(problem, opts.relaxation_options);
        const auto relax_time = Clock::now() - start;

        std::optional<DesignReport> best_swap;
        std::optional<DesignReport> best_rounded;
        for (int d = 0; d < opts.roundings; ++d) {
            const std::uint64_t draw_seed = mix_seed(opts.seed, static_cast<std::uint64_t>(d));
            const auto rounded = dependent_rounding(out.relaxation->allocation, draw_seed);
            DesignReport refined = local_swap(problem, rounded.pattern, opts.max_swap_passes);
            out.draws.push_back({draw_seed, refined.initial_objective, refined.objective, refined.swap_iterations});
            if (!best_rounded || refined.initial_objective < best_rounded->objective) {
                DesignReport r;
                r.method = Method::relax_round;
                r.pattern = rounded.pattern;
                r.budget = problem.budget;
                r.alpha = problem.alpha;
                r.objective = refined.initial_objective;
                r.initial_objective = r.objective;
                r.average_mse = average_mse(problem, r.objective);
                best_rounded = std::move(r);
            }
            if (!best_swap || refined.objective < best_swap->objective) best_swap = std::move(refined);
        }
        if (best_swap) {
            best_rounded->wall_time = relax_time;
            out.relax_round = std::move(best_rounded);
            best_swap->method = Method::relax_round_swap;
            best_swap->wall_time = Clock::now() - start;
            out.relax_round_swap = std::move(best_swap);
        }
    }

    if (opts.greedy) {
        out.greedy = greedy_design(problem);
        DesignReport refined = local_swap(problem, out.greedy->pattern, opts.max_swap_passes);
        refined.method = Method::greedy_swap;
        refined.wall_time += out.greedy->wall_time;
        out.greedy_swap = std::move(refined);
    }
    return out;
}

std::optional<double> mean_nearest_neighbor_distance(const PilotPattern& pattern) {
    const auto& idx = pattern.indices();
    if (idx.size() < 2) return std::nullopt;
    const GridConfig& grid = pattern.grid();
    double total = 0.0;
    for (auto a : idx) {
        double nearest = std::numeric_limits<double>::infinity();
        for (auto b : idx) {
            if (a == b) continue;
            const double dm = grid.subcarrier(a) - grid.subcarrier(b);
            const double dn = grid.symbol(a) - grid.symbol(b);
            nearest = std::min(nearest, std::hypot(dm, dn));
        }
        total += nearest;
    }
    return total / static_cast<double>(idx.size());
}

} // namespace pilot
