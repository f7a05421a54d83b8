// SPDX-License-Identifier: Apache-2.0

#include "pilot/objective.hpp"

#include "pilot/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pilot {

double compute_alpha(double beta, int N, int K, double noise_var) {
    if (K < 1) throw Error(Errc::invalid_budget, "pilot budget K must be at least 1");
    if (N < 1) throw Error(Errc::invalid_spec, "number of symbols must be positive");
    if (!(beta >= 0.0) || !(noise_var > 0.0)) {
        throw Error(Errc::invalid_spec, "beta must be non-negative and noise variance positive");
    }
    return beta * N / (K * noise_var);
}

double noise_var_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

PilotPattern::PilotPattern(GridConfig grid, std::vector<std::size_t> indices)
    : grid_(grid), indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
        throw Error(Errc::invalid_params, "pilot pattern contains duplicate indices");
    }
    if (!indices_.empty() && indices_.back() >= grid_.size()) {
        std::ostringstream os;
        os << "pilot index " << indices_.back() << " outside grid of " << grid_.size() << " cells";
        throw Error(Errc::invalid_params, os.str());
    }
}

PilotPattern PilotPattern::from_mask(GridConfig grid, const std::vector<bool>& mask) {
    if (mask.size() != grid.size()) throw Error(Errc::dimension_mismatch, "mask length differs from grid size");
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < mask.size(); ++k) {
        if (mask[k]) idx.push_back(k);
    }
    return PilotPattern(grid, std::move(idx));
}

bool PilotPattern::contains(std::size_t k) const { return std::binary_search(indices_.begin(), indices_.end(), k); }

std::vector<bool> PilotPattern::mask() const {
    std::vector<bool> out(grid_.size(), false);
    for (auto k : indices_) out[k] = true;
    return out;
}

void FractionalAllocation::validate() const {
    if (static_cast<std::size_t>(weights.size()) != grid.size()) {
        throw Error(Errc::dimension_mismatch, "allocation length differs from grid size");
    }
    if (weights.size() > 0 && (weights.minCoeff() < -1e-9 || weights.maxCoeff() > 1.0 + 1e-9)) {
        throw Error(Errc::infeasible_allocation, "allocation weights leave [0, 1]");
    }
    if (std::abs(weights.sum() - budget) > 1e-6) {
        std::ostringstream os;
        os << "allocation sums to " << weights.sum() << ", expected " << budget;
        throw Error(Errc::infeasible_allocation, os.str());
    }
}

DesignProblem DesignProblem::from_statistics(const ChannelStatistics& stats, int budget, double snr_db,
                                             std::optional<double> beta) {
    if (budget < 1 || static_cast<std::size_t>(budget) > stats.grid.size()) {
        std::ostringstream os;
        os << "pilot budget K=" << budget << " must lie in [1, " << stats.grid.size() << "]";
        throw Error(Errc::invalid_budget, os.str());
    }
    if (beta && !(*beta > 0.0 && *beta <= 1.0)) {
        throw Error(Errc::invalid_params, "power fraction beta must lie in (0, 1]");
    }
    DesignProblem p;
    p.grid = stats.grid;
    p.rows = stats.eigvecs;
    p.prior = stats.eigvals;
    p.budget = budget;
    p.noise_var = noise_var_from_snr_db(snr_db);
    p.unit_pilot_power = !beta.has_value();
    p.power_fraction = beta ? *beta : static_cast<double>(budget) / stats.grid.N;
    p.alpha = compute_alpha(p.power_fraction, p.grid.N, budget, p.noise_var);
    p.truncation_floor = stats.truncation_floor();
    p.validate();
    return p;
}

DesignProblem DesignProblem::with_budget(int new_budget) const {
    if (new_budget < 1 || static_cast<std::size_t>(new_budget) > size()) {
        throw Error(Errc::invalid_budget, "pilot budget out of range");
    }
    DesignProblem p = *this;
    p.budget = new_budget;
    if (unit_pilot_power) p.power_fraction = static_cast<double>(new_budget) / grid.N;
    p.alpha = compute_alpha(p.power_fraction, grid.N, new_budget, noise_var);
    return p;
}

void DesignProblem::validate() const {
    if (static_cast<std::size_t>(rows.rows()) != grid.size()) {
        throw Error(Errc::dimension_mismatch, "rows must have one entry per grid cell");
    }
    if (rows.cols() != prior.size()) throw Error(Errc::dimension_mismatch, "prior length differs from rank");
    if (prior.size() > 0 && !(prior.minCoeff() > 0.0)) throw Error(Errc::invalid_spec, "prior must be positive");
    if (budget < 1 || static_cast<std::size_t>(budget) > size()) {
        throw Error(Errc::invalid_budget, "pilot budget out of range");
    }
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(Errc::invalid_spec, "alpha must be finite and >= 0");
}

double average_mse(const DesignProblem& problem, double objective) {
    return (objective + problem.truncation_floor) / static_cast<double>(problem.size());
}

namespace {

void check_pattern(const DesignProblem& problem, const PilotPattern& pattern) {
    if (pattern.grid().size() != problem.size()) {
        throw Error(Errc::dimension_mismatch, "pattern grid does not match problem");
    }
}

Eigen::MatrixXcd inverse_of(const Eigen::MatrixXcd& A) {
    Eigen::LLT<Eigen::MatrixXcd> llt(A);
    if (llt.info() != Eigen::Success) throw Error(Errc::numeric, "information matrix A is not positive definite");
    Eigen::MatrixXcd inv = llt.solve(Eigen::MatrixXcd::Identity(A.rows(), A.cols()));
    return (0.5 * (inv + inv.adjoint())).eval();
}

} // namespace

Eigen::MatrixXcd build_A(const DesignProblem& problem, const PilotPattern& pattern) {
    check_pattern(problem, pattern);
    Eigen::MatrixXcd A = problem.prior.cwiseInverse().asDiagonal().toDenseMatrix().cast<cd>();
    for (auto i : pattern.indices()) {
        const auto row = problem.rows.row(static_cast<Eigen::Index>(i));
        A.noalias() += problem.alpha * row.adjoint() * row;
    }
    return A;
}

Eigen::MatrixXcd build_A(const DesignProblem& problem, const Eigen::VectorXd& weights) {
    if (static_cast<std::size_t>(weights.size()) != problem.size()) {
        throw Error(Errc::dimension_mismatch, "weight vector length differs from grid size");
    }
    Eigen::MatrixXcd A = problem.prior.cwiseInverse().asDiagonal().toDenseMatrix().cast<cd>();
    const Eigen::MatrixXcd scaled = (problem.alpha * weights).cast<cd>().asDiagonal() * problem.rows;
    A.noalias() += problem.rows.adjoint() * scaled;
    return A;
}

double objective_value(const DesignProblem& problem, const PilotPattern& pattern) {
    return inverse_of(build_A(problem, pattern)).trace().real();
}

double relaxed_objective(const DesignProblem& problem, const Eigen::VectorXd& weights) {
    return inverse_of(build_A(problem, weights)).trace().real();
}

Eigen::VectorXd objective_gradient(const DesignProblem& problem, const Eigen::VectorXd& weights) {
    const Eigen::MatrixXcd Ainv = inverse_of(build_A(problem, weights));
    // Columns of W are A^-1 u_i^H.
    const Eigen::MatrixXcd W = Ainv * problem.rows.adjoint();
    return -problem.alpha * W.colwise().squaredNorm().transpose();
}

Eigen::MatrixXcd error_covariance(const DesignProblem& problem, const PilotPattern& pattern) {
    if (problem.size() > 4096) {
        throw Error(Errc::complexity_guard, "error covariance is limited to grids of at most 4096 cells");
    }
    const Eigen::MatrixXcd Ainv = inverse_of(build_A(problem, pattern));
    return problem.rows * Ainv * problem.rows.adjoint();
}

ObjectiveState ObjectiveState::empty(const DesignProblem& problem) {
    ObjectiveState s;
    s.inverse_ = problem.prior.asDiagonal().toDenseMatrix().cast<cd>();
    s.value_ = problem.prior.sum();
    s.mask_.assign(problem.size(), false);
    return s;
}

ObjectiveState ObjectiveState::from_pattern(const DesignProblem& problem, const PilotPattern& pattern) {
    ObjectiveState s;
    s.inverse_ = inverse_of(build_A(problem, pattern));
    s.value_ = s.inverse_.trace().real();
    s.selected_ = pattern.indices();
    s.mask_ = pattern.mask();
    return s;
}

void ObjectiveState::update(std::size_t j, double sign, const DesignProblem& problem) {
    const Eigen::VectorXcd v = problem.rows.row(static_cast<Eigen::Index>(j)).adjoint();
    const Eigen::VectorXcd w = inverse_ * v;
    const double denom = 1.0 + sign * problem.alpha * v.dot(w).real();
    if (denom <= 1e-12) {
        std::ostringstream os;
        os << "rank-one update of index " << j << " is numerically degenerate (denominator " << denom << ")";
        throw Error(Errc::numeric, os.str());
    }
    inverse_.noalias() -= (sign * problem.alpha / denom) * w * w.adjoint();
    inverse_ = (0.5 * (inverse_ + inverse_.adjoint())).eval();
    value_ = inverse_.trace().real();
}

void ObjectiveState::add(std::size_t j, const DesignProblem& problem) {
    if (j >= mask_.size()) throw Error(Errc::invalid_candidate, "candidate index out of range");
    if (mask_[j]) throw Error(Errc::invalid_candidate, "candidate is already selected");
    update(j, +1.0, problem);
    mask_[j] = true;
    selected_.insert(std::lower_bound(selected_.begin(), selected_.end(), j), j);
}

void ObjectiveState::remove(std::size_t j, const DesignProblem& problem) {
    if (j >= mask_.size() || !mask_[j]) throw Error(Errc::invalid_candidate, "index is not selected");
    update(j, -1.0, problem);
    mask_[j] = false;
    selected_.erase(std::lower_bound(selected_.begin(), selected_.end(), j));
}

double marginal_gain(const ObjectiveState& state, std::size_t j, const DesignProblem& problem) {
    if (j >= problem.size()) throw Error(Errc::invalid_candidate, "candidate index out of range");
    if (state.contains(j)) throw Error(Errc::invalid_candidate, "candidate is already selected");
    const Eigen::VectorXcd v = problem.rows.row(static_cast<Eigen::Index>(j)).adjoint();
    const Eigen::VectorXcd w = state.inverse() * v;
    return problem.alpha * w.squaredNorm() / (1.0 + problem.alpha * v.dot(w).real());
}

ObjectiveState rank_one_update(ObjectiveState state, std::size_t j, Update kind, const DesignProblem& problem) {
    if (kind == Update::add) {
        state.add(j, problem);
    } else {
        state.remove(j, problem);
    }
    return state;
}

double swap_delta(const ObjectiveState& state, std::size_t i, std::size_t j, const DesignProblem& problem) {
    if (!state.contains(i)) throw Error(Errc::invalid_candidate, "swap source must be selected");
    if (j >= problem.size() || state.contains(j)) {
        throw Error(Errc::invalid_candidate, "swap target must be unselected");
    }
    const double alpha = problem.alpha;
    const Eigen::VectorXcd vi = problem.rows.row(static_cast<Eigen::Index>(i)).adjoint();
    const Eigen::VectorXcd vj = problem.rows.row(static_cast<Eigen::Index>(j)).adjoint();
    const Eigen::VectorXcd wi = state.inverse() * vi;
    const Eigen::VectorXcd wj = state.inverse() * vj;

    const double d = 1.0 - alpha * vi.dot(wi).real();
    if (d <= 1e-12) throw Error(Errc::numeric, "removal in swap is numerically degenerate");
    const double removal = alpha * wi.squaredNorm() / d;

    // After removing i: B^-1 v_j = w_j + c w_i.
    const cd gij = vi.dot(wj);
    const cd c = alpha * gij / d;
    const double x2 = wj.squaredNorm() + 2.0 * (c * wj.dot(wi)).real() + std::norm(c) * wi.squaredNorm();
    const double q = vj.dot(wj).real() + alpha * std::norm(gij) / d;
    const double addition = alpha * x2 / (1.0 + alpha * q);
    return removal - addition;
}

} // namespace pilot
