// SPDX-License-Identifier: Apache-2.0

#ifndef PILOT_OBJECTIVE_HPP
#define PILOT_OBJECTIVE_HPP

#include "pilot/channel.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace pilot {

/// Pilot SNR alpha = beta * N / (K * noise_var).
double compute_alpha(double beta, int N, int K, double noise_var);

/// Noise variance for unit average symbol power: 10^(-snr_db / 10).
double noise_var_from_snr_db(double snr_db);

/// K distinct flat grid indices, kept sorted.
class PilotPattern {
public:
    PilotPattern() = default;
    /// Throws Error(invalid_params) on duplicates or out-of-range indices.
    PilotPattern(GridConfig grid, std::vector<std::size_t> indices);

    static PilotPattern from_mask(GridConfig grid, const std::vector<bool>& mask);

    const GridConfig& grid() const noexcept { return grid_; }
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    std::size_t size() const noexcept { return indices_.size(); }
    bool contains(std::size_t k) const;
    std::vector<bool> mask() const;

    friend bool operator==(const PilotPattern&, const PilotPattern&) = default;

private:
    GridConfig grid_{};
    std::vector<std::size_t> indices_;
};

/// Relaxed pattern: weights in [0, 1] summing to the budget.
struct FractionalAllocation {
    GridConfig grid;
    Eigen::VectorXd weights;
    int budget = 0;

    /// Throws Error(infeasible_allocation) when box or sum constraints are violated.
    void validate() const;
};

/// The A-optimal design problem on the dominant channel subspace:
/// A(c) = diag(prior)^-1 + alpha * sum_i c_i u_i^H u_i, with u_i the rows of `rows`.
struct DesignProblem {
    GridConfig grid;
    Eigen::MatrixXcd rows; // P x r
    Eigen::VectorXd prior; // r
    int budget = 1;
    double power_fraction = 1.0; // beta
    double noise_var = 1.0;
    double alpha = 0.0;
    double truncation_floor = 0.0; // energy outside the retained subspace
    bool unit_pilot_power = false; // beta follows K so that sigma_p^2 = 1

    /// Builds the problem from channel statistics. Without an explicit beta, pilots
    /// get unit power (beta = K / N).
    static DesignProblem from_statistics(const ChannelStatistics& stats, int budget, double snr_db,
                                         std::optional<double> beta = std::nullopt);

    /// Same problem with a different budget; alpha is recomputed.
    DesignProblem with_budget(int budget) const;

    std::size_t size() const noexcept { return static_cast<std::size_t>(rows.rows()); }
    int rank() const noexcept { return static_cast<int>(rows.cols()); }
    double pilot_power() const noexcept { return alpha * noise_var; }

    void validate() const;
};

/// Average per-cell MSE reported for an objective value, including the truncation floor.
double average_mse(const DesignProblem& problem, double objective);

Eigen::MatrixXcd build_A(const DesignProblem& problem, const PilotPattern& pattern);
Eigen::MatrixXcd build_A(const DesignProblem& problem, const Eigen::VectorXd& weights);

/// tr(A^-1) for a binary pattern.
double objective_value(const DesignProblem& problem, const PilotPattern& pattern);
/// tr(A(w)^-1) for relaxed weights.
double relaxed_objective(const DesignProblem& problem, const Eigen::VectorXd& weights);

/// d tr(A(w)^-1) / d w_i = -alpha * u_i A^-2 u_i^H.
Eigen::VectorXd objective_gradient(const DesignProblem& problem, const Eigen::VectorXd& weights);

/// C_e = U_r A^-1 U_r^H. Refuses grids larger than 4096 cells.
Eigen::MatrixXcd error_covariance(const DesignProblem& problem, const PilotPattern& pattern);

/// Explicit A^-1 for a selected set together with its trace.
///
/// Rank-one updates keep A^-1 current without refactorization and re-symmetrize
/// after every step.
class ObjectiveState {
public:
    static ObjectiveState empty(const DesignProblem& problem);
    static ObjectiveState from_pattern(const DesignProblem& problem, const PilotPattern& pattern);

    const Eigen::MatrixXcd& inverse() const noexcept { return inverse_; }
    double value() const noexcept { return value_; }
    const std::vector<std::size_t>& selected() const noexcept { return selected_; }
    bool contains(std::size_t k) const { return k < mask_.size() && mask_[k]; }

    PilotPattern pattern(const GridConfig& grid) const { return PilotPattern(grid, selected_); }

    void add(std::size_t j, const DesignProblem& problem);
    void remove(std::size_t j, const DesignProblem& problem);

private:
    void update(std::size_t j, double sign, const DesignProblem& problem);

    Eigen::MatrixXcd inverse_;
    double value_ = 0.0;
    std::vector<std::size_t> selected_;
    std::vector<bool> mask_;
};

enum class Update { add, remove };

/// Reduction of tr(A^-1) obtained by adding candidate j.
double marginal_gain(const ObjectiveState& state, std::size_t j, const DesignProblem& problem);

ObjectiveState rank_one_update(ObjectiveState state, std::size_t j, Update kind, const DesignProblem& problem);

/// tr(A^-1) after replacing selected i by unselected j, minus the current value.
double swap_delta(const ObjectiveState& state, std::size_t i, std::size_t j, const DesignProblem& problem);

} // namespace pilot

#endif
