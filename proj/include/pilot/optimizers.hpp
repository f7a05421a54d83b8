// SPDX-License-Identifier: Apache-2.0

#ifndef PILOT_OPTIMIZERS_HPP
#define PILOT_OPTIMIZERS_HPP

#include "pilot/objective.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pilot {

enum class Method {
    fractional,
    relax_round,
    relax_round_swap,
    greedy,
    greedy_swap,
    local_swap,
    rect,
    diamond,
    exhaustive,
};

const char* to_string(Method m) noexcept;
/// Accepts the CLI spellings ("relax+round+swap", "greedy", "rect", ...).
std::optional<Method> parse_method(const std::string& name);

struct LatticeParams {
    int freq_spacing = 1;
    int time_spacing = 1;
    int freq_offset = 0;
    int time_offset = 0;
    bool staggered = false; // diamond
    bool wrap = false;      // staggered columns wrap around the band edge instead of clipping

    friend bool operator==(const LatticeParams&, const LatticeParams&) = default;
};

struct DesignReport {
    PilotPattern pattern;
    Method method = Method::greedy;
    int budget = 0;
    double alpha = 0.0;
    double objective = 0.0;
    double average_mse = 0.0;
    double initial_objective = 0.0;
    int swap_iterations = 0;
    bool converged = true;
    std::chrono::duration<double> wall_time{};
    std::vector<double> history; // objective after each accepted step
    std::optional<LatticeParams> lattice;
};

// --- convex relaxation ---------------------------------------------------

/// Euclidean projection onto {w in [0,1]^P : sum(w) = K}.
Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& v, int K);

struct RelaxationOptions {
    double tol = 1e-6;
    int max_iters = 5000;
};

struct RelaxationResult {
    FractionalAllocation allocation;
    double objective = 0.0;
    double gradient_norm = 0.0; // norm of the projected-gradient step
    int iterations = 0;
    bool converged = false;
};

/// Minimizes tr(A(w)^-1) over the capped simplex with spectral projected gradient
/// and Armijo backtracking. Never throws on non-convergence; check `converged`.
RelaxationResult solve_relaxation(const DesignProblem& problem, const RelaxationOptions& opts = {});

struct RoundingResult {
    PilotPattern pattern;
    int pair_steps = 0;
};

/// Dependent randomized rounding: exactly K ones, E[c_i] = w_i. The two
/// lowest-indexed fractional coordinates are paired at every step.
RoundingResult dependent_rounding(const FractionalAllocation& allocation, std::uint64_t seed);

// --- combinatorial search ------------------------------------------------

DesignReport greedy_design(const DesignProblem& problem);

/// Best-improvement Fedorov exchange; stops when the best swap improves by less than 1e-10.
DesignReport local_swap(const DesignProblem& problem, const PilotPattern& init, int max_passes = 100);

/// Enumerates all K-subsets. Refuses when C(P, K) exceeds 2e6.
DesignReport exhaustive_search(const DesignProblem& problem);

/// C(n, k) as a double (saturates for huge values).
double binomial(std::size_t n, std::size_t k);

// --- lattice baselines ---------------------------------------------------

enum class LatticeShape { rectangular, diamond };

/// Throws Error(invalid_params) for invalid parameters or an empty pattern.
PilotPattern lattice_pattern(const GridConfig& grid, const LatticeParams& params);

/// Best lattice of the given shape with exactly K pilots; falls back to the
/// largest K' in [K-2, K) that any lattice reaches, recomputing alpha for K'.
DesignReport best_lattice(const DesignProblem& problem, LatticeShape shape);

} // namespace pilot

#endif
