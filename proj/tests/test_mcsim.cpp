// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include "pilot/error.hpp"
#include "pilot/mcsim.hpp"
#include "pilot/optimizers.hpp"

#include "doctest.h"

#include <cmath>

using namespace pilot;

namespace {

ChannelStatistics small_channel(double spread = 0.3) {
    ScatteringSpec s;
    s.delay_profile = DelayProfile::uniform;
    s.doppler_spectrum = DopplerSpectrum::uniform;
    s.delay_spread = spread;
    s.doppler_spread = spread;
    return build_statistics(GridConfig{4, 4}, s);
}

ChannelStatistics rb_channel(double eta = 0.9999) {
    ScatteringSpec s;
    s.spreading_factor = 1e-3;
    s.rank_energy_threshold = eta;
    return build_statistics(GridConfig{12, 14}, s);
}

SimConfig sim_for(const DesignProblem& p, int realizations, std::uint64_t seed = 1) {
    SimConfig c;
    c.realizations = realizations;
    c.rng_seed = seed;
    c.noise_var = p.noise_var;
    return c;
}

} // namespace

TEST_SUITE("mcsim") {

TEST_CASE("sampled channels reproduce the covariance") {
    const auto stats = small_channel();
    const ChannelSampler sampler(stats);
    Rng rng(21);
    constexpr int R = 20000;
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(16, 16);
    double energy = 0.0;
    for (int t = 0; t < R; ++t) {
        const Eigen::VectorXcd g = sampler(rng);
        S += g * g.adjoint();
        energy += g.squaredNorm();
    }
    S /= R;
    const Eigen::MatrixXcd C = stats.full_covariance();
    CHECK((S - C).norm() <= 0.05 * C.norm());
    CHECK(energy / (16.0 * R) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("a nearly flat channel is constant across the grid") {
    const auto stats = small_channel(1e-9);
    Rng rng(4);
    const Eigen::VectorXcd g = sample_channel(stats, rng);
    CHECK((g.array() - g(0)).abs().maxCoeff() <= 1e-6 * std::abs(g(0)));
}

TEST_CASE("received block places pilots, data and noise") {
    const auto stats = small_channel();
    Rng rng(8);
    const Eigen::VectorXcd g = sample_channel(stats, rng);
    const PilotPattern pat(stats.grid, {1, 6, 11});
    const Eigen::VectorXcd clean = synthesize_rx(g, pat, 2.0, 0.0, 0.0, rng);
    for (Eigen::Index k = 0; k < 16; ++k) {
        if (pat.contains(static_cast<std::size_t>(k))) {
            CHECK(std::abs(clean(k) - 2.0 * g(k)) < 1e-14);
        } else {
            CHECK(clean(k) == cd{0.0, 0.0});
        }
    }
    const Eigen::VectorXcd loaded = synthesize_rx(g, pat, 2.0, 1.0, 0.0, rng);
    CHECK(std::abs(loaded(0)) > 0.0);
    CHECK(std::abs(loaded(1) - 2.0 * g(1)) < 1e-14);
    CHECK_THROWS_AS(synthesize_rx(g.head(5), pat, 1.0, 0.0, 0.1, rng), Error);
}

TEST_CASE("pilot-restricted LMMSE matches the full observation model") {
    const auto stats = small_channel();
    const Eigen::MatrixXcd Cg = stats.full_covariance();
    const PilotPattern pat(stats.grid, {0, 5, 10, 15});
    const Eigen::VectorXcd b = pilot_symbols(pat, 1.3, true, 77);
    Rng rng(3);
    for (double data_power : {0.0, 1.0}) {
        const LmmseEstimator est(stats, pat, b, data_power, 0.2, data_power > 0.0);
        for (int t = 0; t < 3; ++t) {
            const Eigen::VectorXcd g = sample_channel(stats, rng);
            Eigen::VectorXcd y = transmit_symbols(pat, b, data_power, rng).cwiseProduct(g);
            for (Eigen::Index k = 0; k < y.size(); ++k) y(k) += std::sqrt(0.2) * rng.complex_normal();
            const Eigen::VectorXcd ref = oracle::full_lmmse(Cg, pat.indices(), b, data_power, 0.2, y);
            CHECK((est.estimate(y) - ref).norm() <= 1e-9 * std::max(1.0, ref.norm()));
        }
    }
    const Eigen::MatrixXcd Ce = oracle::full_error_covariance(Cg, pat.indices(), 1.3, 0.2);
    const LmmseEstimator unit(stats, pat, pilot_symbols(pat, 1.3, false, 0), 0.0, 0.2, false);
    CHECK(unit.analytic_mse() == doctest::Approx(Ce.trace().real() / 16.0).epsilon(1e-10));
}

TEST_CASE("simulation is reproducible and independent of the thread count") {
    const auto stats = rb_channel();
    const auto p = DesignProblem::from_statistics(stats, 14, 10.0);
    const auto pat = greedy_design(p).pattern;
    auto cfg = sim_for(p, 1700, 5);
    const auto a = run_simulation(stats, p, pat, cfg);
    const auto b = run_simulation(stats, p, pat, cfg);
    cfg.threads = 3;
    const auto c = run_simulation(stats, p, pat, cfg);
    CHECK(a.empirical_mse == b.empirical_mse);
    CHECK(a.empirical_mse == c.empirical_mse);
    CHECK(a.standard_error == c.standard_error);
    CHECK((a.per_cell_mse - c.per_cell_mse).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.per_cell_mse.mean() == doctest::Approx(a.empirical_mse).epsilon(1e-12));
    CHECK(a.realizations == 1700);
}

TEST_CASE("empirical MSE agrees with the analytic value") {
    const auto stats = rb_channel();
    const auto p = DesignProblem::from_statistics(stats, 14, 10.0);
    const auto pat = greedy_design(p).pattern;
    const auto sim = run_simulation(stats, p, pat, sim_for(p, 20000));
    CHECK(std::abs(sim.empirical_mse - sim.analytic_mse) <= 4.0 * sim.standard_error);
}

TEST_CASE("perturbed estimator weights do worse") {
    const auto stats = small_channel();
    const auto p = DesignProblem::from_statistics(stats, 4, 10.0);
    const PilotPattern pat(stats.grid, {0, 6, 9, 15});
    const auto cfg = sim_for(p, 20000, 9);
    const Eigen::VectorXcd b = pilot_symbols(pat, std::sqrt(p.pilot_power()), false, mix_seed(cfg.rng_seed, 0));
    const LmmseEstimator est(stats, pat, b, 0.0, cfg.noise_var, false);
    const auto base = run_simulation(stats, p, pat, cfg, est);
    Rng rng(12);
    for (int t = 0; t < 3; ++t) {
        LmmseEstimator bent = est;
        Eigen::MatrixXcd W = est.weights();
        for (Eigen::Index k = 0; k < W.size(); ++k) W(k) *= 1.0 + 0.01 * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        bent.set_weights(W);
        // Common random numbers: same seed, so the difference is not noise.
        CHECK(run_simulation(stats, p, pat, cfg, bent).empirical_mse > base.empirical_mse);
    }
    CHECK_THROWS_AS(LmmseEstimator(est).set_weights(Eigen::MatrixXcd::Zero(3, 3)), Error);
}

TEST_CASE("random pilot phases leave the MSE unchanged") {
    const auto stats = rb_channel();
    const auto p = DesignProblem::from_statistics(stats, 14, 10.0);
    const auto pat = greedy_design(p).pattern;
    auto cfg = sim_for(p, 10000, 2);
    const auto plain = run_simulation(stats, p, pat, cfg);
    cfg.random_pilot_phases = true;
    const auto phased = run_simulation(stats, p, pat, cfg);
    CHECK(phased.analytic_mse == doctest::Approx(plain.analytic_mse).epsilon(1e-10));
    const double se = std::hypot(plain.standard_error, phased.standard_error);
    CHECK(std::abs(phased.empirical_mse - plain.empirical_mse) <= 4.0 * se);
}

TEST_CASE("overwhelming noise drives the MSE to the channel power") {
    const auto stats = rb_channel();
    const auto p = DesignProblem::from_statistics(stats, 14, -80.0);
    const auto sim = run_simulation(stats, p, PilotPattern(stats.grid, {0, 30, 77}), sim_for(p, 2000));
    CHECK(sim.empirical_mse == doctest::Approx(1.0).epsilon(0.05));
    CHECK(sim.analytic_mse == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("data interference cannot beat the analytic MSE") {
    const auto stats = rb_channel();
    const auto p = DesignProblem::from_statistics(stats, 14, 10.0);
    const auto pat = greedy_design(p).pattern;
    auto cfg = sim_for(p, 5000, 6);
    cfg.data_power = 1.0;
    cfg.include_data_interference = true;
    const auto sim = run_simulation(stats, p, pat, cfg);
    CHECK(sim.empirical_mse >= sim.analytic_mse - 4.0 * sim.standard_error);
}

TEST_CASE("simulation settings are validated") {
    const auto stats = small_channel();
    const auto p = DesignProblem::from_statistics(stats, 2, 10.0);
    const PilotPattern pat(stats.grid, {0, 15});
    auto cfg = sim_for(p, 0);
    CHECK_THROWS_AS(run_simulation(stats, p, pat, cfg), Error);
    cfg.realizations = 10;
    cfg.noise_var = 0.0;
    CHECK_THROWS_AS(run_simulation(stats, p, pat, cfg), Error);
}

TEST_CASE("rank truncation: design MSE plus floor against the full-rank estimator") {
    for (double eta : {1.0, 0.9999}) {
        const auto stats = rb_channel(eta);
        const auto p = DesignProblem::from_statistics(stats, 14, 10.0);
        const auto pat = greedy_design(p).pattern;
        const double design = average_mse(p, objective_value(p, pat));
        const Eigen::VectorXcd b = pilot_symbols(pat, std::sqrt(p.pilot_power()), false, 0);
        const double full = LmmseEstimator(stats, pat, b, 0.0, p.noise_var, false).analytic_mse();
        const double floor = stats.truncation_floor() / 168.0;
        if (stats.truncation_floor() <= 1e-9 * stats.total_power) {
            CHECK(std::abs(design - full) <= 1e-6 * full);
        } else {
            CHECK(std::abs(design - full) <= 10.0 * floor);
            MESSAGE("eta " << eta << ": rank " << stats.effective_rank << ", relative gap "
                           << std::abs(design - full) / full);
        }
    }
}

} // TEST_SUITE
