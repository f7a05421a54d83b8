// SPDX-License-Identifier: Apache-2.0

#include "pilot/channel.hpp"

#include "pilot/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace pilot {

namespace {

constexpr double pi = std::numbers::pi;

double sinc(double x) {
    if (x == 0.0) return 1.0;
    return std::sin(pi * x) / (pi * x);
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

} // namespace

void GridConfig::validate() const {
    if (M < 1 || N < 1) {
        std::ostringstream os;
        os << "grid dimensions must be positive, got M=" << M << " N=" << N;
        throw Error(Errc::invalid_spec, os.str());
    }
}

const char* to_string(DelayProfile p) noexcept {
    switch (p) {
    case DelayProfile::uniform: return "uniform";
    case DelayProfile::truncated_exponential: return "truncated_exponential";
    }
    return "?";
}

const char* to_string(DopplerSpectrum s) noexcept {
    switch (s) {
    case DopplerSpectrum::uniform: return "uniform";
    case DopplerSpectrum::jakes: return "jakes";
    }
    return "?";
}

double ScatteringSpec::normalized_delay_spread() const {
    if (delay_spread) return *delay_spread;
    if (doppler_spread) return time_bandwidth * spreading_factor / *doppler_spread;
    return std::sqrt(time_bandwidth * spreading_factor);
}

double ScatteringSpec::normalized_doppler_spread() const {
    if (doppler_spread) return *doppler_spread;
    if (delay_spread) return time_bandwidth * spreading_factor / *delay_spread;
    return std::sqrt(time_bandwidth * spreading_factor);
}

double ScatteringSpec::effective_spreading_factor() const {
    return normalized_delay_spread() * normalized_doppler_spread() / time_bandwidth;
}

std::vector<std::string> ScatteringSpec::validate() const {
    auto fail = [](const std::string& msg) { throw Error(Errc::invalid_spec, msg); };
    if (!positive_finite(time_bandwidth)) fail("time_bandwidth must be positive");
    if (!(delay_spread && doppler_spread) && !positive_finite(spreading_factor))
        fail("spreading_factor must be positive");
    if (delay_spread && !positive_finite(*delay_spread)) fail("delay_spread must be positive");
    if (doppler_spread && !positive_finite(*doppler_spread)) fail("doppler_spread must be positive");
    if (!positive_finite(normalized_delay_spread()) || !positive_finite(normalized_doppler_spread()))
        fail("normalized spreads must be positive");
    if (delay_profile == DelayProfile::truncated_exponential && !positive_finite(rms_fraction))
        fail("rms_fraction must be positive");
    if (!(rank_energy_threshold > 0.0 && rank_energy_threshold <= 1.0))
        fail("rank_energy_threshold must lie in (0, 1]");

    std::vector<std::string> warnings;
    const double spread = effective_spreading_factor();
    if (spread >= 0.1) {
        std::ostringstream os;
        os << "spreading factor " << spread << " >= 0.1; channel is not underspread";
        warnings.push_back(os.str());
    }
    return warnings;
}

cd freq_correlation(const ScatteringSpec& spec, int dm) {
    if (dm == 0) return {1.0, 0.0};
    const double df = spec.normalized_delay_spread();
    switch (spec.delay_profile) {
    case DelayProfile::uniform:
        // Symmetric support [-d_f/2, d_f/2]: the transform is real.
        return {sinc(dm * df), 0.0};
    case DelayProfile::truncated_exponential: {
        // p(x) ~ exp(-a x) on [0, d_f], a = 1 / (rms_fraction * d_f).
        const double a = 1.0 / (spec.rms_fraction * df);
        const cd s{a, 2.0 * pi * dm};
        const cd num = a * (1.0 - std::exp(-s * df));
        const double den = -std::expm1(-a * df);
        return num / (s * den);
    }
    }
    return {};
}

cd time_correlation(const ScatteringSpec& spec, int dn) {
    if (dn == 0) return {1.0, 0.0};
    const double dt = spec.normalized_doppler_spread();
    switch (spec.doppler_spectrum) {
    case DopplerSpectrum::uniform: return {sinc(dn * dt), 0.0};
    case DopplerSpectrum::jakes: return {std::cyl_bessel_j(0.0, pi * dt * std::abs(dn)), 0.0};
    }
    return {};
}

namespace {

template <typename Kernel>
Eigen::MatrixXcd toeplitz(int n, Kernel&& kernel) {
    Eigen::VectorXcd lags(n);
    for (int d = 0; d < n; ++d) lags(d) = kernel(d);
    Eigen::MatrixXcd out(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) out(i, j) = i >= j ? lags(i - j) : std::conj(lags(j - i));
    }
    return out;
}

} // namespace

Eigen::MatrixXcd build_freq_correlation(const ScatteringSpec& spec, int M) {
    if (M < 1) throw Error(Errc::invalid_spec, "number of subcarriers must be positive");
    spec.validate();
    return toeplitz(M, [&](int d) { return freq_correlation(spec, d); });
}

Eigen::MatrixXcd build_time_correlation(const ScatteringSpec& spec, int N) {
    if (N < 1) throw Error(Errc::invalid_spec, "number of symbols must be positive");
    spec.validate();
    return toeplitz(N, [&](int d) { return time_correlation(spec, d); });
}

FactorEigen decompose_factor(const Eigen::MatrixXcd& factor, const char* name) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(factor);
    if (solver.info() != Eigen::Success) {
        throw Error(Errc::numeric, std::string("eigendecomposition of ") + name + " failed");
    }
    const Eigen::Index n = factor.rows();
    const Eigen::VectorXd& asc = solver.eigenvalues();
    const double lmax = asc(n - 1);
    if (!(lmax > 0.0) || asc(0) < -1e-10 * lmax) {
        std::ostringstream os;
        os << name << " is not positive semidefinite (min eigenvalue " << asc(0) << ", max " << lmax << ")";
        throw Error(Errc::numeric, os.str());
    }
    FactorEigen out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = std::max(0.0, asc(n - 1 - i));
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

namespace {

struct EigenProduct {
    double value;
    int time_index;
    int freq_index;
};

std::vector<EigenProduct> sorted_products(const FactorEigen& time_eigen, const FactorEigen& freq_eigen) {
    std::vector<EigenProduct> products;
    products.reserve(static_cast<std::size_t>(time_eigen.values.size() * freq_eigen.values.size()));
    for (int a = 0; a < time_eigen.values.size(); ++a) {
        for (int b = 0; b < freq_eigen.values.size(); ++b) {
            products.push_back({time_eigen.values(a) * freq_eigen.values(b), a, b});
        }
    }
    std::stable_sort(products.begin(), products.end(),
                     [](const EigenProduct& x, const EigenProduct& y) { return x.value > y.value; });
    return products;
}

} // namespace

Eigen::MatrixXcd ChannelStatistics::full_covariance() const {
    const int M = grid.M;
    const int N = grid.N;
    Eigen::MatrixXcd C(grid.size(), grid.size());
    for (int n1 = 0; n1 < N; ++n1) {
        for (int n2 = 0; n2 < N; ++n2) {
            C.block(static_cast<Eigen::Index>(n1) * M, static_cast<Eigen::Index>(n2) * M, M, M) =
                time_corr(n1, n2) * freq_corr;
        }
    }
    return C;
}

Eigen::VectorXd ChannelStatistics::full_spectrum() const {
    const auto products = sorted_products(time_eigen, freq_eigen);
    Eigen::VectorXd out(static_cast<Eigen::Index>(products.size()));
    for (std::size_t i = 0; i < products.size(); ++i) out(static_cast<Eigen::Index>(i)) = products[i].value;
    return out;
}

ChannelStatistics build_statistics(const GridConfig& grid, const ScatteringSpec& spec) {
    grid.validate();
    ChannelStatistics stats;
    stats.grid = grid;
    stats.warnings = spec.validate();
    stats.freq_corr = build_freq_correlation(spec, grid.M);
    stats.time_corr = build_time_correlation(spec, grid.N);
    stats.freq_eigen = decompose_factor(stats.freq_corr, "frequency correlation");
    stats.time_eigen = decompose_factor(stats.time_corr, "time correlation");
    stats.total_power = stats.time_corr.trace().real() * stats.freq_corr.trace().real();

    const auto products = sorted_products(stats.time_eigen, stats.freq_eigen);
    const double lmax = products.front().value;
    const double target = spec.rank_energy_threshold * stats.total_power;

    std::size_t rank = 0;
    double cumulative = 0.0;
    for (const auto& p : products) {
        if (p.value < 1e-12 * lmax) break;
        cumulative += p.value;
        ++rank;
        if (cumulative >= target) break;
    }

    const auto P = static_cast<Eigen::Index>(grid.size());
    stats.effective_rank = static_cast<int>(rank);
    stats.eigvals.resize(static_cast<Eigen::Index>(rank));
    stats.eigvecs.resize(P, static_cast<Eigen::Index>(rank));
    for (std::size_t c = 0; c < rank; ++c) {
        const auto& p = products[c];
        const auto col = static_cast<Eigen::Index>(c);
        stats.eigvals(col) = p.value;
        const auto vt = stats.time_eigen.vectors.col(p.time_index);
        const auto vf = stats.freq_eigen.vectors.col(p.freq_index);
        for (int n = 0; n < grid.N; ++n) {
            stats.eigvecs.block(static_cast<Eigen::Index>(n) * grid.M, col, grid.M, 1) = vt(n) * vf;
        }
    }
    stats.retained_power = stats.eigvals.sum();
    return stats;
}

} // namespace pilot
