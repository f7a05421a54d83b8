// SPDX-License-Identifier: Apache-2.0

#include "pilot/validation.hpp"

#include "pilot/error.hpp"
#include "pilot/mcsim.hpp"
#include "pilot/optimizers.hpp"
#include "pilot/pipeline.hpp"
#include "pilot/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace pilot {

namespace {

using Clock = std::chrono::steady_clock;

/// Runs `body`, fills timing and applies the runtime budget.
template <typename Body>
CheckResult timed(int id, std::string name, double budget_seconds, Body&& body) {
    CheckResult r;
    r.id = id;
    r.name = std::move(name);
    r.budget_seconds = budget_seconds;
    const auto start = Clock::now();
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail += std::string(r.detail.empty() ? "" : "; ") + "exception: " + e.what();
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (budget_seconds > 0.0 && r.seconds > budget_seconds) {
        r.passed = false;
        std::ostringstream os;
        os << "; runtime " << r.seconds << " s exceeds " << budget_seconds << " s";
        r.detail += os.str();
    }
    return r;
}

ChannelStatistics resource_block_channel(double spreading_factor) {
    ScatteringSpec spec;
    spec.spreading_factor = spreading_factor;
    return build_statistics(GridConfig{12, 14}, spec);
}

int budget_for_density(double density, std::size_t cells) {
    return static_cast<int>(std::lround(density * static_cast<double>(cells)));
}

double best_designed(const PipelineResult& p) {
    return std::min(p.greedy_swap->objective, p.relax_round_swap->objective);
}

using cld = std::complex<long double>;
using MatrixLd = Eigen::Matrix<cld, Eigen::Dynamic, Eigen::Dynamic>;

/// tr(A^-1) in extended precision for a set of indices.
long double trace_inverse_ld(const DesignProblem& problem, const std::vector<std::size_t>& set) {
    const auto r = static_cast<Eigen::Index>(problem.rank());
    MatrixLd A = MatrixLd::Zero(r, r);
    for (Eigen::Index a = 0; a < r; ++a) A(a, a) = 1.0L / static_cast<long double>(problem.prior(a));
    const MatrixLd U = problem.rows.cast<cld>();
    for (auto i : set) {
        const auto row = U.row(static_cast<Eigen::Index>(i));
        A += static_cast<long double>(problem.alpha) * row.adjoint() * row;
    }
    Eigen::LLT<MatrixLd> llt(A);
    const MatrixLd inv = llt.solve(MatrixLd::Identity(r, r));
    return inv.trace().real();
}

} // namespace

DesignProblem make_random_problem(const GridConfig& grid, int rank, int budget, double alpha, std::uint64_t seed) {
    Rng rng(seed);
    const auto P = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXcd X(P, rank);
    for (Eigen::Index k = 0; k < X.size(); ++k) X(k) = rng.complex_normal();
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(X);
    DesignProblem p;
    p.grid = grid;
    p.rows = qr.householderQ() * Eigen::MatrixXcd::Identity(P, rank);
    p.prior.resize(rank);
    for (int a = 0; a < rank; ++a) p.prior(a) = 0.5 + 4.5 * rng.uniform();
    p.budget = budget;
    p.noise_var = 1.0;
    p.power_fraction = alpha * budget / grid.N;
    p.alpha = compute_alpha(p.power_fraction, grid.N, budget, p.noise_var);
    p.validate();
    return p;
}

CheckResult check_oracle_gap(const ValidationOptions&) {
    return timed(1, "exhaustive oracle gap on 4x4 grid", 5.0, [](CheckResult& r) {
        ScatteringSpec spec;
        spec.delay_profile = DelayProfile::uniform;
        spec.doppler_spectrum = DopplerSpectrum::uniform;
        spec.delay_spread = 0.3;
        spec.doppler_spread = 0.3;
        const auto stats = build_statistics(GridConfig{4, 4}, spec);
        std::ostringstream os;
        r.passed = true;
        for (int K : {2, 3, 4}) {
            const auto problem = DesignProblem::from_statistics(stats, K, 10.0);
            const double optimum = exhaustive_search(problem).objective;
            const auto greedy = greedy_design(problem);
            const double refined = local_swap(problem, greedy.pattern).objective;
            const double relaxed = solve_relaxation(problem).objective;
            const bool ok = optimum <= refined * (1.0 + 1e-12) && refined <= 1.05 * optimum && relaxed <= optimum;
            r.passed = r.passed && ok;
            os << "K=" << K << " opt=" << optimum << " greedy+swap=" << refined << " relaxed=" << relaxed
               << (ok ? "" : " FAIL") << "; ";
        }
        r.detail = os.str();
    });
}

CheckResult check_incremental_updates(const ValidationOptions& opts) {
    return timed(2, "incremental gains and swap deltas vs reinversion", 10.0, [&](CheckResult& r) {
        const auto stats = resource_block_channel(1e-3);
        const auto problem = DesignProblem::from_statistics(stats, 14, 10.0);
        const std::size_t P = problem.size();
        Rng rng(mix_seed(opts.seed, 2));
        auto random_set = [&](std::size_t size) {
            std::vector<std::size_t> all(P);
            for (std::size_t k = 0; k < P; ++k) all[k] = k;
            for (std::size_t k = 0; k < size; ++k) {
                const auto pick = k + static_cast<std::size_t>(rng.uniform() * static_cast<double>(P - k));
                std::swap(all[k], all[pick]);
            }
            return std::vector<std::size_t>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(size + 1));
        };

        double worst_gain = 0.0;
        double worst_swap = 0.0;
        for (int c = 0; c < 200; ++c) {
            const auto size = 1 + static_cast<std::size_t>(rng.uniform() * 40.0);
            auto picks = random_set(size); // size selected plus one outsider
            const std::size_t j = picks.back();
            picks.pop_back();
            const auto state = ObjectiveState::from_pattern(problem, PilotPattern(problem.grid, picks));

            const double gain = marginal_gain(state, j, problem);
            auto with_j = picks;
            with_j.push_back(j);
            const long double base = trace_inverse_ld(problem, picks);
            const long double gain_ref = base - trace_inverse_ld(problem, with_j);
            // Values far below the objective are pure cancellation; scale them by 1e-6 of it.
            const long double floor = 1e-6L * base;
            worst_gain = std::max(worst_gain,
                                  static_cast<double>(std::abs(gain - gain_ref) / std::max(std::abs(gain_ref), floor)));

            const std::size_t i = picks[static_cast<std::size_t>(rng.uniform() * static_cast<double>(picks.size()))];
            const double delta = swap_delta(state, i, j, problem);
            auto swapped = with_j;
            swapped.erase(std::find(swapped.begin(), swapped.end(), i));
            const long double delta_ref = trace_inverse_ld(problem, swapped) - trace_inverse_ld(problem, picks);
            const auto rel = std::abs(delta - delta_ref) / std::max(std::abs(delta_ref), floor);
            worst_swap = std::max(worst_swap, static_cast<double>(rel));
        }
        r.passed = worst_gain <= 1e-9 && worst_swap <= 1e-9;
        std::ostringstream os;
        os << "max relative error: gain " << worst_gain << ", swap delta " << worst_swap << " (200 cases each)";
        r.detail = os.str();
    });
}

CheckResult check_gradient(const ValidationOptions& opts) {
    return timed(3, "relaxed-objective gradient vs central differences", 0.0, [&](CheckResult& r) {
        const auto problem = make_random_problem(GridConfig{4, 4}, 5, 6, 10.0, mix_seed(opts.seed, 3));
        Rng rng(mix_seed(opts.seed, 33));
        Eigen::VectorXd w(16);
        for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = 0.1 + 0.8 * rng.uniform();
        w = project_capped_simplex(w, problem.budget);

        const Eigen::VectorXd grad = objective_gradient(problem, w);
        constexpr double h = 1e-5;
        double worst = 0.0;
        for (Eigen::Index k = 0; k < w.size(); ++k) {
            Eigen::VectorXd up = w;
            Eigen::VectorXd down = w;
            up(k) += h;
            down(k) -= h;
            const double fd = (relaxed_objective(problem, up) - relaxed_objective(problem, down)) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - grad(k)) / std::abs(grad(k)));
        }
        r.passed = worst <= 1e-5;
        std::ostringstream os;
        os << "max relative deviation " << worst << " over 16 coordinates";
        r.detail = os.str();
    });
}

CheckResult check_dependent_rounding(const ValidationOptions& opts) {
    return timed(4, "dependent rounding budget and marginals", 20.0, [&](CheckResult& r) {
        const Eigen::VectorXd w = (Eigen::VectorXd(16) << 0.9, 0.1, 0.35, 0.65, 0.2, 0.2, 0.6, 0.5, 0.05, 0.45, 0.3,
                                   0.2, 0.15, 0.1, 0.1, 0.15)
                                      .finished();
        const FractionalAllocation alloc{GridConfig{4, 4}, w, 5};
        constexpr int trials = 100000;
        Eigen::VectorXd hits = Eigen::VectorXd::Zero(16);
        bool exact = true;
        const std::uint64_t base = mix_seed(opts.seed, 4);
        for (int t = 0; t < trials; ++t) {
            const auto out = dependent_rounding(alloc, mix_seed(base, static_cast<std::uint64_t>(t)));
            exact = exact && out.pattern.size() == 5;
            for (auto k : out.pattern.indices()) hits(static_cast<Eigen::Index>(k)) += 1.0;
        }
        double worst_z = 0.0;
        for (Eigen::Index k = 0; k < 16; ++k) {
            const double se = std::sqrt(w(k) * (1.0 - w(k)) / trials);
            worst_z = std::max(worst_z, std::abs(hits(k) / trials - w(k)) / se);
        }
        r.passed = exact && worst_z <= 3.0;
        std::ostringstream os;
        os << (exact ? "all outputs have 5 pilots" : "budget violated") << "; worst marginal deviation " << worst_z
           << " standard errors";
        r.detail = os.str();
    });
}

CheckResult check_monte_carlo(const ValidationOptions& opts) {
    return timed(5, "Monte Carlo MSE vs analytic error covariance", 60.0, [&](CheckResult& r) {
        const auto stats = resource_block_channel(1e-3);
        const auto problem = DesignProblem::from_statistics(stats, 14, 10.0);
        const auto pattern = local_swap(problem, greedy_design(problem).pattern).pattern;
        SimConfig cfg;
        cfg.realizations = 10000;
        cfg.rng_seed = mix_seed(opts.seed, 5);
        cfg.data_power = 0.0;
        cfg.noise_var = problem.noise_var;
        cfg.threads = opts.threads;
        const auto sim = run_simulation(stats, problem, pattern, cfg);
        const double gap = std::abs(sim.empirical_mse - sim.analytic_mse);
        r.passed = gap <= 4.0 * sim.standard_error && gap <= 0.02 * sim.analytic_mse;
        std::ostringstream os;
        os << "empirical " << sim.empirical_mse << " analytic " << sim.analytic_mse << " gap "
           << gap / sim.standard_error << " SE, " << 100.0 * gap / sim.analytic_mse << "%";
        r.detail = os.str();
    });
}

CheckResult check_lattice_ordering(const ValidationOptions& opts) {
    return timed(6, "designed patterns beat best lattices across densities", 180.0, [&](CheckResult& r) {
        const auto stats = resource_block_channel(5e-3);
        std::ostringstream os;
        r.passed = true;
        for (double density : {0.05, 0.08, 0.1, 0.15, 0.2, 0.3}) {
            const int K = budget_for_density(density, stats.grid.size());
            const auto problem = DesignProblem::from_statistics(stats, K, 20.0);
            PipelineOptions popts;
            popts.seed = mix_seed(opts.seed, 6);
            const double designed = best_designed(run_pipelines(problem, popts));
            os << "d=" << density << " K=" << K << " designed=" << designed;
            for (auto shape : {LatticeShape::rectangular, LatticeShape::diamond}) {
                const char* label = shape == LatticeShape::rectangular ? " rect=" : " diamond=";
                try {
                    const auto lattice = best_lattice(problem, shape);
                    const bool ok = designed < lattice.objective;
                    r.passed = r.passed && ok;
                    os << label << lattice.objective << "(K'=" << lattice.budget << ")" << (ok ? "" : " FAIL");
                } catch (const Error& e) {
                    if (e.code() != Errc::no_feasible_lattice) throw;
                    os << label << "none";
                }
            }
            os << "; ";
        }
        r.detail = os.str();
    });
}

CheckResult check_pipeline_agreement(const ValidationOptions& opts) {
    return timed(7, "local swap refinement and pipeline agreement", 30.0, [&](CheckResult& r) {
        const auto stats = resource_block_channel(1e-3);
        const auto problem = DesignProblem::from_statistics(stats, 14, 10.0);
        PipelineOptions popts;
        popts.seed = mix_seed(opts.seed, 7);
        const auto p = run_pipelines(problem, popts);
        const double a = p.relax_round_swap->objective;
        const double b = p.greedy_swap->objective;
        bool improves = b <= p.greedy->objective;
        for (const auto& d : p.draws) improves = improves && d.swapped_objective <= d.objective;
        const double spread = std::abs(a - b) / std::min(a, b);
        r.passed = improves && spread <= 0.02;
        std::ostringstream os;
        os << p.draws.size() << " refined draws" << (improves ? "" : " (swap worsened one)") << ", best rounded "
           << p.relax_round->objective << " -> best refined " << a << ", greedy " << p.greedy->objective << " -> "
           << b << ", relative gap " << 100.0 * spread << "%";
        r.detail = os.str();
    });
}

CheckResult check_spreading_ordering(const ValidationOptions& opts) {
    return timed(8, "designed MSE grows with the spreading factor", 0.0, [&](CheckResult& r) {
        std::ostringstream os;
        double previous = -1.0;
        r.passed = true;
        for (double spread : {1e-4, 1e-3, 1e-2}) {
            const auto stats = resource_block_channel(spread);
            const int K = budget_for_density(0.15, stats.grid.size());
            const auto problem = DesignProblem::from_statistics(stats, K, 20.0);
            PipelineOptions popts;
            popts.seed = mix_seed(opts.seed, 8);
            const double mse = average_mse(problem, best_designed(run_pipelines(problem, popts)));
            r.passed = r.passed && mse > previous;
            previous = mse;
            os << "dD=" << spread << " r=" << stats.effective_rank << " mse=" << mse << "; ";
        }
        r.detail = os.str();
    });
}

CheckResult report_structure_trends(const ValidationOptions& opts) {
    return timed(9, "pattern structure versus SNR and spreading (inspect)", 0.0, [&](CheckResult& r) {
        r.manual = true;
        r.passed = true;
        std::ostringstream os;
        auto run = [&](double spread, double snr) {
            const auto stats = resource_block_channel(spread);
            const auto problem = DesignProblem::from_statistics(stats, 20, snr);
            PipelineOptions popts;
            popts.relaxation = false;
            popts.seed = mix_seed(opts.seed, 9);
            const auto p = run_pipelines(problem, popts);
            return mean_nearest_neighbor_distance(p.greedy_swap->pattern).value_or(0.0);
        };
        os << "nearest-neighbor distance vs SNR (dD=1e-3):";
        for (double snr : {3.0, 10.0, 20.0}) os << " " << snr << "dB=" << run(1e-3, snr);
        os << "; vs spreading (20 dB):";
        for (double spread : {1e-4, 1e-3, 1e-2}) os << " " << spread << "=" << run(spread, 20.0);
        r.detail = os.str();
    });
}

CheckResult check_kronecker_spectrum(const ValidationOptions&) {
    return timed(10, "factored spectrum vs explicit covariance", 0.0, [&](CheckResult& r) {
        double worst = 0.0;
        const GridConfig grids[] = {{2, 2}, {3, 5}, {4, 4}, {6, 7}, {8, 8}};
        for (const auto& grid : grids) {
            for (int variant = 0; variant < 3; ++variant) {
                ScatteringSpec spec;
                spec.spreading_factor = variant == 0 ? 1e-3 : (variant == 1 ? 0.02 : 0.08);
                spec.delay_profile = variant == 1 ? DelayProfile::uniform : DelayProfile::truncated_exponential;
                spec.doppler_spectrum = variant == 2 ? DopplerSpectrum::uniform : DopplerSpectrum::jakes;
                const auto stats = build_statistics(grid, spec);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(stats.full_covariance(),
                                                                        Eigen::EigenvaluesOnly);
                Eigen::VectorXd full = solver.eigenvalues().reverse();
                const Eigen::VectorXd factored = stats.full_spectrum();
                worst = std::max(worst, (full - factored).cwiseAbs().maxCoeff() / full(0));
            }
        }
        r.passed = worst <= 1e-9;
        std::ostringstream os;
        os << "max eigenvalue deviation " << worst << " relative to the largest eigenvalue";
        r.detail = os.str();
    });
}

const std::vector<CheckFn>& all_checks() {
    static const std::vector<CheckFn> checks{
        check_oracle_gap,        check_incremental_updates, check_gradient,           check_dependent_rounding,
        check_monte_carlo,       check_lattice_ordering,    check_pipeline_agreement, check_spreading_ordering,
        report_structure_trends, check_kronecker_spectrum,
    };
    return checks;
}

std::vector<CheckResult> run_checks(const ValidationOptions& opts,
                                    const std::function<void(const CheckResult&)>& on_result) {
    std::vector<CheckResult> out;
    for (auto fn : all_checks()) {
        out.push_back(fn(opts));
        if (on_result) on_result(out.back());
    }
    return out;
}

std::string format_check_line(const CheckResult& r) {
    char head[64];
    std::snprintf(head, sizeof head, "[%-6s] %2d ", r.manual ? "INFO" : (r.passed ? "PASS" : "FAIL"), r.id);
    char tail[48];
    std::snprintf(tail, sizeof tail, " (%.2f s)", r.seconds);
    std::string detail = r.detail;
    while (!detail.empty() && (detail.back() == ' ' || detail.back() == ';')) detail.pop_back();
    return std::string(head) + r.name + ": " + detail + tail;
}

} // namespace pilot
