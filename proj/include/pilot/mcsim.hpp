// SPDX-License-Identifier: Apache-2.0

#ifndef PILOT_MCSIM_HPP
#define PILOT_MCSIM_HPP

#include "pilot/channel.hpp"
#include "pilot/objective.hpp"
#include "pilot/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace pilot {

struct SimConfig {
    int realizations = 10000;
    std::uint64_t rng_seed = 1;
    double data_power = 0.0; // sigma_d^2
    double noise_var = 0.1;  // sigma_n^2
    bool include_data_interference = false;
    bool random_pilot_phases = false;
    int threads = 1;

    void validate() const;
};

struct SimResult {
    double empirical_mse = 0.0;
    double analytic_mse = 0.0;
    double standard_error = 0.0;
    Eigen::MatrixXd per_cell_mse; // M x N
    int realizations = 0;
};

/// Draws g ~ CN(0, C_t (x) C_f) through the eigen square roots of the factors.
class ChannelSampler {
public:
    explicit ChannelSampler(const ChannelStatistics& stats);

    Eigen::VectorXcd operator()(Rng& rng) const;

private:
    GridConfig grid_;
    Eigen::MatrixXcd freq_root_;
    Eigen::MatrixXcd time_root_;
};

Eigen::VectorXcd sample_channel(const ChannelStatistics& stats, Rng& rng);

/// Transmit block: pilot symbols on the pattern, CN(0, data_power) elsewhere.
Eigen::VectorXcd transmit_symbols(const PilotPattern& pattern, const Eigen::VectorXcd& pilot_symbols,
                                  double data_power, Rng& rng);

/// y = x .* g + n with pilots of modulus sigma_p and unit phase.
Eigen::VectorXcd synthesize_rx(const Eigen::VectorXcd& g, const PilotPattern& pattern, double sigma_p,
                               double data_power, double noise_var, Rng& rng);

/// LMMSE estimator g_hat = C_gy C_y^-1 y for a fixed pilot pattern, stored as a
/// P x K weight matrix applied to the pilot observations.
///
/// Data cells are uncorrelated with the channel at second order (zero-mean data,
/// disjoint from the pilots), so the data-interference term of C_y only enlarges
/// the data block of a block-diagonal system and leaves the weights unchanged.
class LmmseEstimator {
public:
    LmmseEstimator(const ChannelStatistics& stats, const PilotPattern& pattern, const Eigen::VectorXcd& pilot_symbols,
                   double data_power, double noise_var, bool include_data_interference);

    Eigen::VectorXcd estimate(const Eigen::VectorXcd& y) const;

    const Eigen::MatrixXcd& weights() const noexcept { return weights_; }
    void set_weights(Eigen::MatrixXcd weights);

    /// tr(C_e) / P from the full-rank closed form (pilot-only observation model).
    double analytic_mse() const noexcept { return analytic_mse_; }

private:
    std::vector<std::size_t> pilots_;
    Eigen::MatrixXcd weights_;
    double analytic_mse_ = 0.0;
};

Eigen::VectorXcd lmmse_estimate(const Eigen::VectorXcd& y, const PilotPattern& pattern, const ChannelStatistics& stats,
                                double sigma_p, double data_power, double noise_var, bool include_data_interference);

/// Pilot symbols of modulus sigma_p, unit phase or uniformly random phase.
Eigen::VectorXcd pilot_symbols(const PilotPattern& pattern, double sigma_p, bool random_phase, std::uint64_t seed);

SimResult run_simulation(const ChannelStatistics& stats, const DesignProblem& problem, const PilotPattern& pattern,
                         const SimConfig& cfg);

/// Same, with a caller-supplied estimator (e.g. perturbed weights).
SimResult run_simulation(const ChannelStatistics& stats, const DesignProblem& problem, const PilotPattern& pattern,
                         const SimConfig& cfg, const LmmseEstimator& estimator);

} // namespace pilot

#endif
