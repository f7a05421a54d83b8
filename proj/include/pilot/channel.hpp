// SPDX-License-Identifier: Apache-2.0

#ifndef PILOT_CHANNEL_HPP
#define PILOT_CHANNEL_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pilot {

using cd = std::complex<double>;

/// Time-frequency resource grid of M subcarriers by N OFDM symbols.
///
/// Cells are vectorized column-major by symbol: cell (m, n) maps to the flat
/// index n * M + m.
struct GridConfig {
    int M = 12;
    int N = 14;

    std::size_t size() const noexcept { return static_cast<std::size_t>(M) * static_cast<std::size_t>(N); }
    std::size_t index(int m, int n) const noexcept { return static_cast<std::size_t>(n) * M + m; }
    int subcarrier(std::size_t k) const noexcept { return static_cast<int>(k % static_cast<std::size_t>(M)); }
    int symbol(std::size_t k) const noexcept { return static_cast<int>(k / static_cast<std::size_t>(M)); }

    void validate() const;

    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

enum class DelayProfile { uniform, truncated_exponential };
enum class DopplerSpectrum { uniform, jakes };

const char* to_string(DelayProfile p) noexcept;
const char* to_string(DopplerSpectrum s) noexcept;

/// Separable WSSUS scattering function, parameterized in grid-normalized units.
///
/// The normalized delay spread is d_f = F * tau_D and the normalized Doppler
/// spread is d_t = T * nu_D, so that d_f * d_t = time_bandwidth * spreading_factor.
/// Unless overridden, the spreading factor is split evenly between the axes.
struct ScatteringSpec {
    double spreading_factor = 1e-3;
    double time_bandwidth = 1.0;
    std::optional<double> delay_spread;   // d_f override
    std::optional<double> doppler_spread; // d_t override
    DelayProfile delay_profile = DelayProfile::truncated_exponential;
    double rms_fraction = 0.25;
    DopplerSpectrum doppler_spectrum = DopplerSpectrum::jakes;
    double rank_energy_threshold = 0.9999;

    double normalized_delay_spread() const;
    double normalized_doppler_spread() const;
    /// d_f * d_t / time_bandwidth; equals spreading_factor unless both spreads are overridden.
    double effective_spreading_factor() const;

    /// Throws Error(invalid_spec) on invalid parameters. Returns non-fatal warnings.
    std::vector<std::string> validate() const;
};

/// Correlation between two subcarriers dm apart.
cd freq_correlation(const ScatteringSpec& spec, int dm);
/// Correlation between two OFDM symbols dn apart.
cd time_correlation(const ScatteringSpec& spec, int dn);

Eigen::MatrixXcd build_freq_correlation(const ScatteringSpec& spec, int M);
Eigen::MatrixXcd build_time_correlation(const ScatteringSpec& spec, int N);

/// Eigenpairs of one Hermitian factor, eigenvalues descending and clipped at zero.
struct FactorEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;
};

FactorEigen decompose_factor(const Eigen::MatrixXcd& factor, const char* name);

/// Second-order statistics of the channel on a grid: C_g = C_t (x) C_f and its
/// dominant eigenspace.
struct ChannelStatistics {
    GridConfig grid;
    Eigen::MatrixXcd freq_corr;
    Eigen::MatrixXcd time_corr;
    FactorEigen freq_eigen;
    FactorEigen time_eigen;

    Eigen::VectorXd eigvals;  // r retained eigenvalues, descending
    Eigen::MatrixXcd eigvecs; // P x r, orthonormal columns
    int effective_rank = 0;
    double total_power = 0.0;    // trace(C_g)
    double retained_power = 0.0; // sum of eigvals
    std::vector<std::string> warnings;

    /// Energy left out of the retained subspace (the MSE floor of any design).
    double truncation_floor() const { return std::max(0.0, total_power - retained_power); }

    /// Explicit P x P covariance; diagnostics only.
    Eigen::MatrixXcd full_covariance() const;

    /// All P eigenvalues of C_g from the factor spectra, descending.
    Eigen::VectorXd full_spectrum() const;
};

ChannelStatistics build_statistics(const GridConfig& grid, const ScatteringSpec& spec);

} // namespace pilot

#endif
