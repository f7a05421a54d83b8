// SPDX-License-Identifier: Apache-2.0

#include "pilot/mcsim.hpp"

#include "pilot/error.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <sstream>

namespace pilot {

void SimConfig::validate() const {
    if (realizations < 1) throw Error(Errc::invalid_params, "simulation needs at least one realization");
    if (!(data_power >= 0.0)) throw Error(Errc::invalid_params, "data power must be non-negative");
    if (!(noise_var > 0.0)) throw Error(Errc::invalid_params, "noise variance must be positive");
}

namespace {

Eigen::MatrixXcd square_root(const FactorEigen& f) {
    return f.vectors * f.values.cwiseSqrt().cast<cd>().asDiagonal();
}

} // namespace

ChannelSampler::ChannelSampler(const ChannelStatistics& stats)
    : grid_(stats.grid), freq_root_(square_root(stats.freq_eigen)), time_root_(square_root(stats.time_eigen)) {}

Eigen::VectorXcd ChannelSampler::operator()(Rng& rng) const {
    Eigen::MatrixXcd Z(grid_.M, grid_.N);
    for (Eigen::Index k = 0; k < Z.size(); ++k) Z(k) = rng.complex_normal();
    // vec(L_f Z L_t^T) = (L_t (x) L_f) vec(Z)
    const Eigen::MatrixXcd G = freq_root_ * Z * time_root_.transpose();
    return Eigen::Map<const Eigen::VectorXcd>(G.data(), G.size());
}

Eigen::VectorXcd sample_channel(const ChannelStatistics& stats, Rng& rng) { return ChannelSampler(stats)(rng); }

Eigen::VectorXcd pilot_symbols(const PilotPattern& pattern, double sigma_p, bool random_phase, std::uint64_t seed) {
    Eigen::VectorXcd b(static_cast<Eigen::Index>(pattern.size()));
    Rng rng(seed);
    for (Eigen::Index k = 0; k < b.size(); ++k) {
        b(k) = random_phase ? std::polar(sigma_p, 2.0 * std::numbers::pi * rng.uniform()) : cd{sigma_p, 0.0};
    }
    return b;
}

Eigen::VectorXcd transmit_symbols(const PilotPattern& pattern, const Eigen::VectorXcd& pilots, double data_power,
                                  Rng& rng) {
    if (pilots.size() != static_cast<Eigen::Index>(pattern.size())) {
        throw Error(Errc::dimension_mismatch, "one pilot symbol per pilot cell required");
    }
    const auto P = static_cast<Eigen::Index>(pattern.grid().size());
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(P);
    const double data_amp = std::sqrt(data_power);
    std::size_t next = 0;
    const auto& idx = pattern.indices();
    for (Eigen::Index k = 0; k < P; ++k) {
        if (next < idx.size() && idx[next] == static_cast<std::size_t>(k)) {
            x(k) = pilots(static_cast<Eigen::Index>(next));
            ++next;
        } else if (data_power > 0.0) {
            x(k) = data_amp * rng.complex_normal();
        }
    }
    return x;
}

Eigen::VectorXcd synthesize_rx(const Eigen::VectorXcd& g, const PilotPattern& pattern, double sigma_p,
                               double data_power, double noise_var, Rng& rng) {
    if (static_cast<std::size_t>(g.size()) != pattern.grid().size()) {
        throw Error(Errc::dimension_mismatch, "channel length differs from grid size");
    }
    const Eigen::VectorXcd pilots = Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(pattern.size()), sigma_p);
    Eigen::VectorXcd y = transmit_symbols(pattern, pilots, data_power, rng).cwiseProduct(g);
    if (noise_var > 0.0) {
        const double amp = std::sqrt(noise_var);
        for (Eigen::Index k = 0; k < y.size(); ++k) y(k) += amp * rng.complex_normal();
    }
    return y;
}

LmmseEstimator::LmmseEstimator(const ChannelStatistics& stats, const PilotPattern& pattern,
                               const Eigen::VectorXcd& pilots, double data_power, double noise_var,
                               bool include_data_interference)
    : pilots_(pattern.indices()) {
    const GridConfig& grid = stats.grid;
    if (pattern.grid().size() != grid.size()) throw Error(Errc::dimension_mismatch, "pattern grid mismatch");
    if (pilots.size() != static_cast<Eigen::Index>(pilots_.size())) {
        throw Error(Errc::dimension_mismatch, "one pilot symbol per pilot cell required");
    }
    (void)data_power;
    (void)include_data_interference;

    const auto P = static_cast<Eigen::Index>(grid.size());
    const auto K = static_cast<Eigen::Index>(pilots_.size());
    auto cov = [&](std::size_t k, std::size_t l) {
        return stats.time_corr(grid.symbol(k), grid.symbol(l)) *
               stats.freq_corr(grid.subcarrier(k), grid.subcarrier(l));
    };

    // C_gy restricted to pilot columns: C_g[:, S] diag(conj(b)).
    Eigen::MatrixXcd Cgy(P, K);
    for (Eigen::Index c = 0; c < K; ++c) {
        const std::size_t l = pilots_[static_cast<std::size_t>(c)];
        for (Eigen::Index k = 0; k < P; ++k) Cgy(k, c) = cov(static_cast<std::size_t>(k), l) * std::conj(pilots(c));
    }
    // Pilot block of C_y: diag(b) C_g[S, S] diag(conj(b)) + noise.
    Eigen::MatrixXcd Cy(K, K);
    for (Eigen::Index a = 0; a < K; ++a) {
        for (Eigen::Index c = 0; c < K; ++c) Cy(a, c) = pilots(a) * Cgy(static_cast<Eigen::Index>(pilots_[a]), c);
        Cy(a, a) += noise_var;
    }

    weights_.resize(P, K);
    double explained = 0.0;
    if (K > 0) {
        Eigen::LDLT<Eigen::MatrixXcd> ldlt(Cy);
        if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().real().minCoeff() > 0.0)) {
            throw Error(Errc::numeric, "observation covariance is singular");
        }
        weights_ = ldlt.solve(Cgy.adjoint()).adjoint();
        explained = (weights_.cwiseProduct(Cgy.conjugate())).sum().real();
    }
    analytic_mse_ = (stats.total_power - explained) / static_cast<double>(P);
}

void LmmseEstimator::set_weights(Eigen::MatrixXcd weights) {
    if (weights.rows() != weights_.rows() || weights.cols() != weights_.cols()) {
        throw Error(Errc::dimension_mismatch, "estimator weight shape mismatch");
    }
    weights_ = std::move(weights);
}

Eigen::VectorXcd LmmseEstimator::estimate(const Eigen::VectorXcd& y) const {
    Eigen::VectorXcd yp(static_cast<Eigen::Index>(pilots_.size()));
    for (std::size_t c = 0; c < pilots_.size(); ++c) {
        yp(static_cast<Eigen::Index>(c)) = y(static_cast<Eigen::Index>(pilots_[c]));
    }
    if (yp.size() == 0) return Eigen::VectorXcd::Zero(weights_.rows());
    return weights_ * yp;
}

Eigen::VectorXcd lmmse_estimate(const Eigen::VectorXcd& y, const PilotPattern& pattern, const ChannelStatistics& stats,
                                double sigma_p, double data_power, double noise_var, bool include_data_interference) {
    const Eigen::VectorXcd pilots = Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(pattern.size()), sigma_p);
    return LmmseEstimator(stats, pattern, pilots, data_power, noise_var, include_data_interference).estimate(y);
}

namespace {

constexpr int batch_size = 500;

struct BatchSums {
    double sum = 0.0;
    double sum_sq = 0.0;
    Eigen::VectorXd per_cell;
};

BatchSums run_batch(const ChannelSampler& sampler, const PilotPattern& pattern, const Eigen::VectorXcd& pilots,
                    const LmmseEstimator& estimator, const SimConfig& cfg, int count, std::uint64_t seed) {
    const auto P = static_cast<Eigen::Index>(pattern.grid().size());
    BatchSums out{0.0, 0.0, Eigen::VectorXd::Zero(P)};
    Rng rng(seed);
    const double noise_amp = std::sqrt(cfg.noise_var);
    for (int t = 0; t < count; ++t) {
        const Eigen::VectorXcd g = sampler(rng);
        Eigen::VectorXcd y = transmit_symbols(pattern, pilots, cfg.data_power, rng).cwiseProduct(g);
        for (Eigen::Index k = 0; k < P; ++k) y(k) += noise_amp * rng.complex_normal();
        const Eigen::VectorXd err = (g - estimator.estimate(y)).cwiseAbs2();
        const double mse = err.sum() / static_cast<double>(P);
        out.sum += mse;
        out.sum_sq += mse * mse;
        out.per_cell += err;
    }
    return out;
}

} // namespace

SimResult run_simulation(const ChannelStatistics& stats, const DesignProblem& problem, const PilotPattern& pattern,
                         const SimConfig& cfg) {
    cfg.validate();
    const Eigen::VectorXcd pilots =
        pilot_symbols(pattern, std::sqrt(problem.pilot_power()), cfg.random_pilot_phases, mix_seed(cfg.rng_seed, 0));
    const LmmseEstimator estimator(stats, pattern, pilots, cfg.data_power, cfg.noise_var,
                                   cfg.include_data_interference);
    return run_simulation(stats, problem, pattern, cfg, estimator);
}

SimResult run_simulation(const ChannelStatistics& stats, const DesignProblem& problem, const PilotPattern& pattern,
                         const SimConfig& cfg, const LmmseEstimator& estimator) {
    cfg.validate();
    const Eigen::VectorXcd pilots =
        pilot_symbols(pattern, std::sqrt(problem.pilot_power()), cfg.random_pilot_phases, mix_seed(cfg.rng_seed, 0));
    const ChannelSampler sampler(stats);
    const int batches = (cfg.realizations + batch_size - 1) / batch_size;

    auto batch = [&](int b) {
        const int count = std::min(batch_size, cfg.realizations - b * batch_size);
        return run_batch(sampler, pattern, pilots, estimator, cfg, count, mix_seed(cfg.rng_seed, 1 + b));
    };

    // Batches own their seeds; the reduction runs in batch order, so the result
    // does not depend on the thread count.
    std::vector<BatchSums> sums(static_cast<std::size_t>(batches));
    const int workers = std::max(1, cfg.threads);
    for (int first = 0; first < batches; first += workers) {
        std::vector<std::future<BatchSums>> running;
        const int last = std::min(batches, first + workers);
        for (int b = first + 1; b < last; ++b) running.push_back(std::async(std::launch::async, batch, b));
        sums[static_cast<std::size_t>(first)] = batch(first);
        for (int b = first + 1; b < last; ++b) {
            sums[static_cast<std::size_t>(b)] = running[static_cast<std::size_t>(b - first - 1)].get();
        }
    }

    const auto P = static_cast<Eigen::Index>(stats.grid.size());
    double sum = 0.0;
    double sum_sq = 0.0;
    Eigen::VectorXd per_cell = Eigen::VectorXd::Zero(P);
    for (const auto& s : sums) {
        sum += s.sum;
        sum_sq += s.sum_sq;
        per_cell += s.per_cell;
    }
    const double R = cfg.realizations;
    SimResult out;
    out.realizations = cfg.realizations;
    out.empirical_mse = sum / R;
    const double var = R > 1 ? std::max(0.0, (sum_sq - R * out.empirical_mse * out.empirical_mse) / (R - 1.0)) : 0.0;
    out.standard_error = std::sqrt(var / R);
    out.analytic_mse = estimator.analytic_mse();
    per_cell /= R;
    out.per_cell_mse = Eigen::Map<const Eigen::MatrixXd>(per_cell.data(), stats.grid.M, stats.grid.N);
    return out;
}

} // namespace pilot
