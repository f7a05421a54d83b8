// SPDX-License-Identifier: Apache-2.0

#include "pilot/error.hpp"
#include "pilot/optimizers.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace pilot {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::array<std::pair<Method, const char*>, 9> method_names{{
    {Method::fractional, "fractional"},
    {Method::relax_round, "relax+round"},
    {Method::relax_round_swap, "relax+round+swap"},
    {Method::greedy, "greedy"},
    {Method::greedy_swap, "greedy+swap"},
    {Method::local_swap, "swap"},
    {Method::rect, "rect"},
    {Method::diamond, "diamond"},
    {Method::exhaustive, "exhaustive"},
}};

} // namespace

const char* to_string(Method m) noexcept {
    for (const auto& [method, name] : method_names) {
        if (method == m) return name;
    }
    return "?";
}

std::optional<Method> parse_method(const std::string& name) {
    for (const auto& [method, text] : method_names) {
        if (name == text) return method;
    }
    return std::nullopt;
}

double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double out = 1.0;
    for (std::size_t i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
    return std::round(out);
}

DesignReport greedy_design(const DesignProblem& problem) {
    problem.validate();
    const auto start = Clock::now();
    const auto P = static_cast<Eigen::Index>(problem.size());
    const Eigen::MatrixXcd V = problem.rows.adjoint(); // column j is u_j^H
    const double alpha = problem.alpha;

    DesignReport report;
    report.method = Method::greedy;
    ObjectiveState state = ObjectiveState::empty(problem);

    for (int step = 0; step < problem.budget; ++step) {
        const Eigen::MatrixXcd W = state.inverse() * V;
        const Eigen::VectorXd num = W.colwise().squaredNorm().transpose();
        const Eigen::VectorXd quad = V.cwiseProduct(W.conjugate()).colwise().sum().real().transpose();

        Eigen::Index best = -1;
        double best_gain = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < P; ++j) {
            if (state.contains(static_cast<std::size_t>(j))) continue;
            const double gain = alpha * num(j) / (1.0 + alpha * quad(j));
            if (gain > best_gain) {
                best_gain = gain;
                best = j;
            }
        }
        state.add(static_cast<std::size_t>(best), problem);
        report.history.push_back(state.value());
    }

    report.pattern = state.pattern(problem.grid);
    report.budget = problem.budget;
    report.alpha = alpha;
    report.objective = state.value();
    report.initial_objective = state.value();
    report.average_mse = average_mse(problem, report.objective);
    report.wall_time = Clock::now() - start;
    return report;
}

DesignReport local_swap(const DesignProblem& problem, const PilotPattern& init, int max_passes) {
    problem.validate();
    if (static_cast<int>(init.size()) != problem.budget) {
        std::ostringstream os;
        os << "initial pattern has " << init.size() << " pilots, expected " << problem.budget;
        throw Error(Errc::invalid_budget, os.str());
    }
    const auto start = Clock::now();
    const auto P = static_cast<Eigen::Index>(problem.size());
    const auto r = static_cast<Eigen::Index>(problem.rank());
    const Eigen::MatrixXcd V = problem.rows.adjoint();
    const double alpha = problem.alpha;

    ObjectiveState state = ObjectiveState::from_pattern(problem, init);
    DesignReport report;
    report.method = Method::local_swap;
    report.initial_objective = state.value();
    report.converged = false;

    for (int pass = 0; pass < max_passes; ++pass) {
        const auto& S = state.selected();
        const auto K = static_cast<Eigen::Index>(S.size());
        const Eigen::MatrixXcd W = state.inverse() * V;
        const Eigen::VectorXd h_diag = W.colwise().squaredNorm().transpose();
        const Eigen::VectorXd g_diag = V.cwiseProduct(W.conjugate()).colwise().sum().real().transpose();

        Eigen::MatrixXcd VS(r, K);
        Eigen::MatrixXcd WS(r, K);
        for (Eigen::Index s = 0; s < K; ++s) {
            VS.col(s) = V.col(static_cast<Eigen::Index>(S[static_cast<std::size_t>(s)]));
            WS.col(s) = W.col(static_cast<Eigen::Index>(S[static_cast<std::size_t>(s)]));
        }
        const Eigen::MatrixXcd G = VS.adjoint() * W; // g_ij = u_i A^-1 u_j^H
        const Eigen::MatrixXcd H = WS.adjoint() * W; // h_ij = u_i A^-2 u_j^H

        double best_delta = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        std::size_t best_j = 0;
        for (Eigen::Index s = 0; s < K; ++s) {
            const auto i = static_cast<Eigen::Index>(S[static_cast<std::size_t>(s)]);
            const double d = 1.0 - alpha * g_diag(i);
            if (d <= 1e-12) throw Error(Errc::numeric, "swap removal is numerically degenerate");
            const double removal = alpha * h_diag(i) / d;
            for (Eigen::Index j = 0; j < P; ++j) {
                if (state.contains(static_cast<std::size_t>(j))) continue;
                const cd gij = G(s, j);
                const cd c = alpha * gij / d;
                const double x2 = h_diag(j) + 2.0 * (c * std::conj(H(s, j))).real() + std::norm(c) * h_diag(i);
                const double q = g_diag(j) + alpha * std::norm(gij) / d;
                const double delta = removal - alpha * x2 / (1.0 + alpha * q);
                if (delta < best_delta) {
                    best_delta = delta;
                    best_i = static_cast<std::size_t>(i);
                    best_j = static_cast<std::size_t>(j);
                }
            }
        }

        if (!(best_delta <= -1e-10)) {
            report.converged = true;
            break;
        }
        state.remove(best_i, problem);
        state.add(best_j, problem);
        ++report.swap_iterations;
        report.history.push_back(state.value());
    }

    report.pattern = state.pattern(problem.grid);
    report.budget = problem.budget;
    report.alpha = alpha;
    report.objective = state.value();
    report.average_mse = average_mse(problem, report.objective);
    report.wall_time = Clock::now() - start;
    return report;
}

DesignReport exhaustive_search(const DesignProblem& problem) {
    problem.validate();
    const std::size_t P = problem.size();
    const auto K = static_cast<std::size_t>(problem.budget);
    const double count = binomial(P, K);
    if (count > 2e6) {
        std::ostringstream os;
        os << "exhaustive search over C(" << P << ", " << K << ") = " << count << " subsets exceeds the 2e6 guard";
        throw Error(Errc::complexity_guard, os.str());
    }
    const auto start = Clock::now();

    std::vector<std::size_t> comb(K);
    for (std::size_t k = 0; k < K; ++k) comb[k] = k;

    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_comb = comb;
    for (;;) {
        const double value = objective_value(problem, PilotPattern(problem.grid, comb));
        // Rounding-level differences count as ties so the earliest subset wins.
        if (std::isinf(best) || value < best - 1e-12 * std::abs(best)) {
            best = value;
            best_comb = comb;
        }
        // Next combination in lexicographic order.
        std::size_t pos = K;
        while (pos > 0 && comb[pos - 1] == P - K + pos - 1) --pos;
        if (pos == 0) break;
        ++comb[pos - 1];
        for (std::size_t k = pos; k < K; ++k) comb[k] = comb[k - 1] + 1;
    }

    DesignReport report;
    report.method = Method::exhaustive;
    report.pattern = PilotPattern(problem.grid, best_comb);
    report.budget = problem.budget;
    report.alpha = problem.alpha;
    report.objective = best;
    report.initial_objective = best;
    report.average_mse = average_mse(problem, best);
    report.wall_time = Clock::now() - start;
    return report;
}

} // namespace pilot
