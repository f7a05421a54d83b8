// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include "pilot/error.hpp"
#include "pilot/objective.hpp"
#include "pilot/optimizers.hpp"
#include "pilot/rng.hpp"
#include "pilot/validation.hpp"

#include "doctest.h"

#include <algorithm>
#include <numeric>

using namespace pilot;

namespace {

std::vector<std::size_t> random_subset(std::size_t P, std::size_t K, Rng& rng) {
    std::vector<std::size_t> all(P);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t k = 0; k < K; ++k) {
        const auto pick = k + static_cast<std::size_t>(rng.uniform() * static_cast<double>(P - k));
        std::swap(all[k], all[pick]);
    }
    all.resize(K);
    return all;
}

Eigen::VectorXd random_allocation(std::size_t P, int K, Rng& rng) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(P));
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = rng.uniform();
    return project_capped_simplex(v, K);
}

ChannelStatistics rb_stats(double sf = 1e-3) {
    ScatteringSpec s;
    s.spreading_factor = sf;
    return build_statistics(GridConfig{12, 14}, s);
}

} // namespace

TEST_SUITE("objective") {

TEST_CASE("pilot SNR follows the power budget formula") {
    CHECK(compute_alpha(1.0, 14, 14, 0.1) == doctest::Approx(10.0));
    CHECK(compute_alpha(0.5, 14, 7, 1.0) == doctest::Approx(1.0));
    CHECK(compute_alpha(0.8, 14, 20, 0.3) == doctest::Approx(2.0 * compute_alpha(0.8, 14, 40, 0.3)));
    CHECK_THROWS_AS(compute_alpha(1.0, 14, 0, 0.1), Error);
    try {
        compute_alpha(1.0, 14, 0, 0.1);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_budget);
    }
    CHECK(noise_var_from_snr_db(10.0) == doctest::Approx(0.1));
    CHECK(noise_var_from_snr_db(0.0) == doctest::Approx(1.0));
}

TEST_CASE("problem fields stay consistent") {
    const auto st = rb_stats();
    const auto p = DesignProblem::from_statistics(st, 14, 10.0);
    CHECK(p.alpha == compute_alpha(p.power_fraction, 14, 14, p.noise_var));
    CHECK(p.alpha == doctest::Approx(10.0)); // unit pilot power
    CHECK(p.pilot_power() == doctest::Approx(1.0));
    const auto q = p.with_budget(28);
    CHECK(q.budget == 28);
    CHECK(q.pilot_power() == doctest::Approx(1.0));
    const auto fixed = DesignProblem::from_statistics(st, 14, 10.0, 0.5);
    CHECK(fixed.alpha == doctest::Approx(5.0));
    CHECK(fixed.with_budget(7).alpha == doctest::Approx(10.0));
    CHECK_THROWS_AS(DesignProblem::from_statistics(st, 0, 10.0), Error);
    CHECK_THROWS_AS(DesignProblem::from_statistics(st, 169, 10.0), Error);
    CHECK_THROWS_AS(DesignProblem::from_statistics(st, 14, 10.0, 1.5), Error);
}

TEST_CASE("patterns keep sorted distinct in-range indices") {
    const GridConfig g{4, 4};
    const PilotPattern p(g, {5, 1, 9});
    CHECK(p.indices() == std::vector<std::size_t>{1, 5, 9});
    CHECK(p.contains(5));
    CHECK_FALSE(p.contains(4));
    CHECK(PilotPattern::from_mask(g, p.mask()) == p);
    CHECK_THROWS_AS(PilotPattern(g, {1, 1}), Error);
    CHECK_THROWS_AS(PilotPattern(g, {16}), Error);
}

TEST_CASE("fractional allocations enforce box and sum") {
    const GridConfig g{2, 2};
    FractionalAllocation a{g, Eigen::Vector4d(0.5, 0.5, 0.5, 0.5), 2};
    CHECK_NOTHROW(a.validate());
    a.weights(0) = 1.2;
    CHECK_THROWS_AS(a.validate(), Error);
    a.weights = Eigen::Vector4d(0.5, 0.5, 0.5, 0.4);
    CHECK_THROWS_AS(a.validate(), Error);
}

TEST_CASE("A without pilots is the inverse prior") {
    const auto p = make_random_problem(GridConfig{4, 4}, 3, 2, 5.0, 7);
    const PilotPattern none(p.grid, {});
    const Eigen::MatrixXcd A = build_A(p, none);
    CHECK((A - p.prior.cwiseInverse().cast<cd>().asDiagonal().toDenseMatrix()).norm() < 1e-14);
    CHECK(objective_value(p, none) == doctest::Approx(p.prior.sum()));

    auto zero_alpha = p;
    zero_alpha.alpha = 0.0;
    CHECK(objective_value(zero_alpha, PilotPattern(p.grid, {0, 3})) == doctest::Approx(p.prior.sum()));
}

TEST_CASE("A matches the full-size selection-matrix construction") {
    const auto p = make_random_problem(GridConfig{4, 4}, 3, 2, 5.0, 11);
    const PilotPattern pat(p.grid, {2, 13});
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(16, 16);
    D(2, 2) = 1.0;
    D(13, 13) = 1.0;
    const Eigen::MatrixXcd direct =
        Eigen::MatrixXcd(p.prior.cwiseInverse().cast<cd>().asDiagonal()) + p.alpha * p.rows.adjoint() * D * p.rows;
    CHECK((build_A(p, pat) - direct).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::VectorXd w = Eigen::VectorXd::Zero(16);
    w(2) = 1.0;
    w(13) = 1.0;
    CHECK((build_A(p, w) - direct).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(build_A(p, Eigen::VectorXd::Zero(5)), Error);
}

TEST_CASE("average MSE without pilots is one") {
    const auto st = rb_stats();
    const auto p = DesignProblem::from_statistics(st, 14, 10.0);
    const double obj = objective_value(p, PilotPattern(p.grid, {}));
    CHECK(average_mse(p, obj) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("observing every cell at high SNR drives the objective to zero") {
    const auto st = rb_stats(1e-2);
    std::vector<std::size_t> all(168);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto p = DesignProblem::from_statistics(st, 168, 80.0);
    CHECK(objective_value(p, PilotPattern(p.grid, all)) < 1e-6);
}

TEST_CASE("designed pattern beats the best rectangular lattice on the resource block") {
    const auto st = rb_stats();
    const auto p = DesignProblem::from_statistics(st, 14, 10.0);
    const auto designed = local_swap(p, greedy_design(p).pattern);
    const auto rect = best_lattice(p, LatticeShape::rectangular);
    REQUIRE(rect.pattern.size() == 14);
    CHECK(designed.objective < rect.objective);
}

TEST_CASE("marginal gains match reinversion") {
    const auto p = make_random_problem(GridConfig{12, 14}, 8, 14, 10.0, 3);
    Rng rng(99);
    for (int c = 0; c < 100; ++c) {
        auto set = random_subset(p.size(), 1 + static_cast<std::size_t>(rng.uniform() * 20), rng);
        const std::size_t j = set.back();
        set.pop_back();
        const auto state = ObjectiveState::from_pattern(p, PilotPattern(p.grid, set));
        const double gain = marginal_gain(state, j, p);
        const double before = oracle::trace_objective(p.rows, p.prior, p.alpha, set);
        auto with = set;
        with.push_back(j);
        const double after = oracle::trace_objective(p.rows, p.prior, p.alpha, with);
        CHECK(gain >= 0.0);
        CHECK(std::abs(gain - (before - after)) <= 1e-9 * std::max(std::abs(before - after), 1e-6 * before));
        // Monotonicity: adding a pilot never hurts.
        CHECK(after <= before + 1e-12);
    }
}

TEST_CASE("zero rows give zero gain") {
    auto p = make_random_problem(GridConfig{4, 4}, 3, 2, 5.0, 5);
    p.rows.row(6).setZero();
    const auto state = ObjectiveState::from_pattern(p, PilotPattern(p.grid, {1}));
    CHECK(marginal_gain(state, 6, p) == 0.0);
}

TEST_CASE("selected candidates are rejected") {
    const auto p = make_random_problem(GridConfig{4, 4}, 3, 2, 5.0, 5);
    auto state = ObjectiveState::empty(p);
    state.add(4, p);
    CHECK_THROWS_AS(marginal_gain(state, 4, p), Error);
    CHECK_THROWS_AS(state.add(4, p), Error);
    CHECK_THROWS_AS(state.add(16, p), Error);
    CHECK_THROWS_AS(ObjectiveState::empty(p).remove(4, p), Error);
    CHECK_THROWS_AS(swap_delta(state, 4, 4, p), Error);
    CHECK_THROWS_AS(swap_delta(state, 5, 6, p), Error);
}

TEST_CASE("add then remove restores the inverse") {
    const auto p = make_random_problem(GridConfig{12, 14}, 10, 14, 10.0, 8);
    const auto base = ObjectiveState::from_pattern(p, PilotPattern(p.grid, {3, 50, 90}));
    const auto added = rank_one_update(base, 17, Update::add, p);
    CHECK(added.contains(17));
    const auto back = rank_one_update(added, 17, Update::remove, p);
    CHECK((back.inverse() - base.inverse()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(back.value() == doctest::Approx(base.value()).epsilon(1e-12));
    CHECK(back.selected() == base.selected());
}

TEST_CASE("sequential updates agree with one-shot inversion") {
    const auto p = make_random_problem(GridConfig{12, 14}, 10, 20, 10.0, 21);
    Rng rng(4);
    const auto set = random_subset(p.size(), 20, rng);
    auto state = ObjectiveState::empty(p);
    for (auto j : set) state.add(j, p);
    const Eigen::MatrixXcd direct = build_A(p, PilotPattern(p.grid, set)).inverse();
    CHECK((state.inverse() - direct).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((state.inverse() - state.inverse().adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(state.value() - state.inverse().trace().real()) < 1e-10);
    CHECK(state.pattern(p.grid) == PilotPattern(p.grid, set));
}

TEST_CASE("swap deltas match recomputation") {
    const auto p = make_random_problem(GridConfig{12, 14}, 8, 14, 10.0, 31);
    Rng rng(6);
    for (int c = 0; c < 100; ++c) {
        auto set = random_subset(p.size(), 2 + static_cast<std::size_t>(rng.uniform() * 20), rng);
        const std::size_t j = set.back();
        set.pop_back();
        const std::size_t i = set[static_cast<std::size_t>(rng.uniform() * static_cast<double>(set.size()))];
        const auto state = ObjectiveState::from_pattern(p, PilotPattern(p.grid, set));
        auto swapped = set;
        std::replace(swapped.begin(), swapped.end(), i, j);
        const double before = oracle::trace_objective(p.rows, p.prior, p.alpha, set);
        const double ref = oracle::trace_objective(p.rows, p.prior, p.alpha, swapped) - before;
        CHECK(std::abs(swap_delta(state, i, j, p) - ref) <= 1e-9 * std::max(std::abs(ref), 1e-6 * before));
    }
}

TEST_CASE("gradient matches central differences and the gain numerator") {
    const auto p = make_random_problem(GridConfig{4, 4}, 5, 6, 10.0, 17);
    Rng rng(2);
    const Eigen::VectorXd w = random_allocation(16, 6, rng);
    const Eigen::VectorXd g = objective_gradient(p, w);
    const Eigen::MatrixXcd Ainv = build_A(p, w).inverse();
    for (Eigen::Index k = 0; k < 16; ++k) {
        Eigen::VectorXd up = w;
        Eigen::VectorXd down = w;
        up(k) += 1e-5;
        down(k) -= 1e-5;
        const double fd = (relaxed_objective(p, up) - relaxed_objective(p, down)) / 2e-5;
        CHECK(std::abs(fd - g(k)) <= 1e-5 * std::abs(g(k)));
        CHECK(g(k) <= 0.0);
        const Eigen::VectorXcd x = Ainv * p.rows.row(k).adjoint();
        CHECK(g(k) == doctest::Approx(-p.alpha * x.squaredNorm()).epsilon(1e-12));
    }
    auto off = p;
    off.alpha = 0.0;
    CHECK(objective_gradient(off, w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("relaxed objective is convex along random chords") {
    const auto p = make_random_problem(GridConfig{4, 4}, 5, 6, 10.0, 19);
    Rng rng(12);
    for (int c = 0; c < 20; ++c) {
        const Eigen::VectorXd w1 = random_allocation(16, 6, rng);
        const Eigen::VectorXd w2 = random_allocation(16, 6, rng);
        for (double t : {0.25, 0.5, 0.75}) {
            const double mid = relaxed_objective(p, t * w1 + (1 - t) * w2);
            CHECK(mid <= t * relaxed_objective(p, w1) + (1 - t) * relaxed_objective(p, w2) + 1e-9);
        }
    }
}

TEST_CASE("error covariance is consistent with the objective and the full model") {
    ScatteringSpec s;
    s.delay_profile = DelayProfile::uniform;
    s.doppler_spectrum = DopplerSpectrum::uniform;
    s.delay_spread = 0.3;
    s.doppler_spread = 0.3;
    s.rank_energy_threshold = 1.0;
    const auto st = build_statistics(GridConfig{4, 4}, s);
    const auto p = DesignProblem::from_statistics(st, 3, 10.0);
    const PilotPattern pat(p.grid, {0, 6, 15});
    const auto Ce = error_covariance(p, pat);
    const double obj = objective_value(p, pat);
    CHECK(std::abs(Ce.trace().real() - obj) <= 1e-9 * obj);
    for (Eigen::Index k = 0; k < 16; ++k) {
        CHECK(Ce(k, k).real() >= -1e-12);
        CHECK(Ce(k, k).real() <= 1.0 + 1e-9);
    }
    const auto full = oracle::full_error_covariance(st.full_covariance(), pat.indices(), std::sqrt(p.pilot_power()),
                                                    p.noise_var);
    CHECK(std::abs(full.trace().real() - (obj + st.truncation_floor())) <= 1e-8 * full.trace().real());

    const auto prior_only = error_covariance(p, PilotPattern(p.grid, {}));
    CHECK((prior_only - st.full_covariance()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("low-rank objective agrees with the full model on small grids") {
    for (double d : {0.2, 0.5, 0.8}) {
        ScatteringSpec s;
        s.delay_spread = d;
        s.doppler_spread = d;
        s.rank_energy_threshold = 1.0;
        const auto st = build_statistics(GridConfig{3, 4}, s);
        const auto p = DesignProblem::from_statistics(st, 4, 5.0);
        const PilotPattern pat(p.grid, {0, 4, 7, 11});
        const double lowrank = objective_value(p, pat) + st.truncation_floor();
        const double full = oracle::full_error_covariance(st.full_covariance(), pat.indices(),
                                                          std::sqrt(p.pilot_power()), p.noise_var)
                                .trace()
                                .real();
        CHECK(std::abs(lowrank - full) <= 1e-8 * full);
    }
}

TEST_CASE("relabeling cells leaves the objective unchanged") {
    const auto p = make_random_problem(GridConfig{4, 4}, 4, 3, 10.0, 23);
    Rng rng(77);
    std::vector<std::size_t> perm(16);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t k = 15; k > 0; --k) std::swap(perm[k], perm[static_cast<std::size_t>(rng.uniform() * (k + 1))]);
    auto q = p;
    for (std::size_t k = 0; k < 16; ++k) {
        q.rows.row(static_cast<Eigen::Index>(perm[k])) = p.rows.row(static_cast<Eigen::Index>(k));
    }
    const std::vector<std::size_t> set{1, 7, 12};
    std::vector<std::size_t> mapped;
    for (auto k : set) mapped.push_back(perm[k]);
    CHECK(objective_value(q, PilotPattern(q.grid, mapped)) ==
          doctest::Approx(objective_value(p, PilotPattern(p.grid, set))).epsilon(1e-12));
}

TEST_CASE("error covariance refuses very large grids") {
    const auto p = make_random_problem(GridConfig{65, 64}, 2, 2, 1.0, 1);
    try {
        error_covariance(p, PilotPattern(p.grid, {0, 1}));
        FAIL("expected a complexity guard");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::complexity_guard);
    }
}

} // TEST_SUITE
