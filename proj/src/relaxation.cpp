// SPDX-License-Identifier: Apache-2.0

#include "pilot/error.hpp"
#include "pilot/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pilot {

Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& v, int K) {
    const auto P = v.size();
    if (K < 0 || K > P) throw Error(Errc::invalid_budget, "projection budget must lie in [0, P]");
    if (K == 0) return Eigen::VectorXd::Zero(P);
    if (K == P) return Eigen::VectorXd::Ones(P);
    if (v.minCoeff() >= 0.0 && v.maxCoeff() <= 1.0 && std::abs(v.sum() - K) <= 1e-12) return v;

    auto clipped_sum = [&](double tau) { return (v.array() - tau).cwiseMax(0.0).cwiseMin(1.0).sum(); };

    // clipped_sum is non-increasing in tau; bracket and bisect.
    double lo = v.minCoeff() - 1.0; // sum = P
    double hi = v.maxCoeff();       // sum = 0
    double tau = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        tau = 0.5 * (lo + hi);
        const double s = clipped_sum(tau);
        if (std::abs(s - K) <= 1e-12) break;
        if (s > K) {
            lo = tau;
        } else {
            hi = tau;
        }
    }

    // Solve exactly on the free set identified by the bisection.
    double free_sum = 0.0;
    int free_count = 0;
    int saturated = 0;
    for (Eigen::Index i = 0; i < P; ++i) {
        const double x = v(i) - tau;
        if (x >= 1.0) {
            ++saturated;
        } else if (x > 0.0) {
            free_sum += v(i);
            ++free_count;
        }
    }
    if (free_count > 0) {
        const double exact = (free_sum + saturated - K) / free_count;
        if (std::abs(clipped_sum(exact) - K) <= std::abs(clipped_sum(tau) - K)) tau = exact;
    }
    return (v.array() - tau).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

namespace {

struct Evaluation {
    double value;
    Eigen::VectorXd gradient;
};

Evaluation evaluate(const DesignProblem& problem, const Eigen::VectorXd& w) {
    const Eigen::MatrixXcd A = build_A(problem, w);
    Eigen::LLT<Eigen::MatrixXcd> llt(A);
    if (llt.info() != Eigen::Success) throw Error(Errc::numeric, "relaxed information matrix lost definiteness");
    const Eigen::MatrixXcd W = llt.solve(problem.rows.adjoint());
    const Eigen::MatrixXcd Ainv = llt.solve(Eigen::MatrixXcd::Identity(A.rows(), A.cols()));
    return {Ainv.trace().real(), -problem.alpha * W.colwise().squaredNorm().transpose()};
}

} // namespace

RelaxationResult solve_relaxation(const DesignProblem& problem, const RelaxationOptions& opts) {
    problem.validate();
    const auto P = static_cast<Eigen::Index>(problem.size());
    const int K = problem.budget;

    constexpr double armijo = 1e-4;
    constexpr double shrink = 0.5;
    constexpr double min_step = 1e-12;
    constexpr double max_step = 1e12;

    Eigen::VectorXd w = project_capped_simplex(Eigen::VectorXd::Constant(P, double(K) / double(P)), K);
    Evaluation cur = evaluate(problem, w);
    const double gmax = cur.gradient.cwiseAbs().maxCoeff();
    double step = gmax > 0.0 ? 1.0 / gmax : 1.0;

    RelaxationResult out;
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        out.gradient_norm = (w - project_capped_simplex(w - cur.gradient, K)).norm();
        if (out.gradient_norm <= opts.tol) {
            out.converged = true;
            break;
        }

        double t = std::clamp(step, min_step, max_step);
        Eigen::VectorXd trial;
        Evaluation next;
        bool accepted = false;
        while (t >= min_step) {
            trial = project_capped_simplex(w - t * cur.gradient, K);
            next = evaluate(problem, trial);
            if (next.value <= cur.value + armijo * cur.gradient.dot(trial - w)) {
                accepted = true;
                break;
            }
            t *= shrink;
        }
        if (!accepted) break; // stalled at machine precision

        const Eigen::VectorXd s = trial - w;
        const Eigen::VectorXd y = next.gradient - cur.gradient;
        const double sy = s.dot(y);
        step = sy > 0.0 ? s.squaredNorm() / sy : max_step;

        w = std::move(trial);
        cur = std::move(next);
    }
    if (!out.converged) {
        out.gradient_norm = (w - project_capped_simplex(w - cur.gradient, K)).norm();
        out.converged = out.gradient_norm <= opts.tol;
    }

    out.iterations = it;
    out.objective = cur.value;
    out.allocation = FractionalAllocation{problem.grid, std::move(w), K};
    return out;
}

} // namespace pilot
