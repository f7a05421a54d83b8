// SPDX-License-Identifier: Apache-2.0

#include "pilot/error.hpp"
#include "pilot/optimizers.hpp"
#include "pilot/rng.hpp"

#include <cmath>
#include <sstream>

namespace pilot {

namespace {

constexpr double snap_tol = 1e-9;

double snap(double x) {
    if (x <= snap_tol) return 0.0;
    if (x >= 1.0 - snap_tol) return 1.0;
    return x;
}

bool fractional(double x) { return x > 0.0 && x < 1.0; }

} // namespace

RoundingResult dependent_rounding(const FractionalAllocation& allocation, std::uint64_t seed) {
    const auto& w = allocation.weights;
    if (static_cast<std::size_t>(w.size()) != allocation.grid.size()) {
        throw Error(Errc::dimension_mismatch, "allocation length differs from grid size");
    }
    if (w.size() > 0 && (w.minCoeff() < -snap_tol || w.maxCoeff() > 1.0 + snap_tol)) {
        throw Error(Errc::infeasible_allocation, "allocation weights leave [0, 1]");
    }
    const double total = w.sum();
    if (std::abs(total - std::round(total)) > 1e-6 || std::abs(total - allocation.budget) > 1e-6) {
        std::ostringstream os;
        os << "allocation sums to " << total << ", not the integer budget " << allocation.budget;
        throw Error(Errc::infeasible_allocation, os.str());
    }

    std::vector<double> c(static_cast<std::size_t>(w.size()));
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = snap(w(static_cast<Eigen::Index>(k)));

    Rng rng(seed);
    RoundingResult out;

    // Scanning upward keeps (carry, k) equal to the two lowest-indexed
    // fractional coordinates: every step makes at least one of them integral.
    std::size_t carry = c.size();
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (!fractional(c[k])) continue;
        if (carry == c.size()) {
            carry = k;
            continue;
        }
        const std::size_t i = carry;
        const std::size_t j = k;
        const double up = std::min(1.0 - c[i], c[j]);
        const double down = std::min(c[i], 1.0 - c[j]);
        if (rng.uniform() <= down / (up + down)) {
            c[i] += up;
            c[j] -= up;
        } else {
            c[i] -= down;
            c[j] += down;
        }
        c[i] = snap(c[i]);
        c[j] = snap(c[j]);
        ++out.pair_steps;

        if (fractional(c[i])) {
            carry = i;
        } else if (fractional(c[j])) {
            carry = j;
        } else {
            carry = c.size();
        }
    }
    // A lone leftover coordinate can only come from round-off in the sum.
    if (carry != c.size()) c[carry] = std::round(c[carry]);

    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (c[k] == 1.0) idx.push_back(k);
    }
    if (static_cast<int>(idx.size()) != allocation.budget) {
        std::ostringstream os;
        os << "rounding produced " << idx.size() << " pilots, expected " << allocation.budget;
        throw Error(Errc::numeric, os.str());
    }
    out.pattern = PilotPattern(allocation.grid, std::move(idx));
    return out;
}

} // namespace pilot
