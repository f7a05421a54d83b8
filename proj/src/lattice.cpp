// SPDX-License-Identifier: Apache-2.0

#include "pilot/error.hpp"
#include "pilot/optimizers.hpp"

#include <limits>
#include <set>
#include <sstream>

namespace pilot {

PilotPattern lattice_pattern(const GridConfig& grid, const LatticeParams& params) {
    grid.validate();
    const auto& p = params;
    if (p.freq_spacing < 1 || p.time_spacing < 1 || p.freq_offset < 0 || p.time_offset < 0 ||
        p.freq_offset >= p.freq_spacing || p.time_offset >= p.time_spacing) {
        std::ostringstream os;
        os << "invalid lattice: spacing (" << p.freq_spacing << ", " << p.time_spacing << "), offset ("
           << p.freq_offset << ", " << p.time_offset << ")";
        throw Error(Errc::invalid_params, os.str());
    }

    const int shift = p.staggered ? p.freq_spacing / 2 : 0;
    std::set<std::size_t> cells;
    int column = 0;
    for (int n = p.time_offset; n < grid.N; n += p.time_spacing, ++column) {
        const int s = (column % 2 == 1) ? shift : 0;
        for (int m = p.freq_offset; m < grid.M; m += p.freq_spacing) {
            int row = m + s;
            if (row >= grid.M) {
                if (!p.wrap) continue;
                row %= grid.M;
            }
            cells.insert(grid.index(row, n));
        }
    }
    if (cells.empty()) throw Error(Errc::invalid_params, "lattice parameters select no grid cells");
    return PilotPattern(grid, {cells.begin(), cells.end()});
}

DesignReport best_lattice(const DesignProblem& problem, LatticeShape shape) {
    problem.validate();
    const auto start = std::chrono::steady_clock::now();
    const GridConfig& grid = problem.grid;

    struct Candidate {
        LatticeParams params;
        PilotPattern pattern;
    };
    std::vector<Candidate> candidates;
    for (int fs = 1; fs <= grid.M; ++fs) {
        for (int ts = 1; ts <= grid.N; ++ts) {
            for (int fo = 0; fo < fs; ++fo) {
                for (int to = 0; to < ts; ++to) {
                    LatticeParams params{fs, ts, fo, to, shape == LatticeShape::diamond, false};
                    candidates.push_back({params, lattice_pattern(grid, params)});
                }
            }
        }
    }

    int target = -1;
    for (int k = problem.budget; k >= std::max(1, problem.budget - 2) && target < 0; --k) {
        for (const auto& c : candidates) {
            if (static_cast<int>(c.pattern.size()) == k) {
                target = k;
                break;
            }
        }
    }
    if (target < 0) {
        std::ostringstream os;
        os << "no " << (shape == LatticeShape::diamond ? "diamond" : "rectangular") << " lattice has between "
           << problem.budget - 2 << " and " << problem.budget << " pilots";
        throw Error(Errc::no_feasible_lattice, os.str());
    }

    const DesignProblem sized = target == problem.budget ? problem : problem.with_budget(target);
    const Candidate* best = nullptr;
    double best_value = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        if (static_cast<int>(c.pattern.size()) != target) continue;
        const double value = objective_value(sized, c.pattern);
        if (value < best_value) {
            best_value = value;
            best = &c;
        }
    }

    DesignReport report;
    report.method = shape == LatticeShape::diamond ? Method::diamond : Method::rect;
    report.pattern = best->pattern;
    report.lattice = best->params;
    report.budget = target;
    report.alpha = sized.alpha;
    report.objective = best_value;
    report.initial_objective = best_value;
    report.average_mse = average_mse(sized, best_value);
    report.wall_time = std::chrono::steady_clock::now() - start;
    return report;
}

} // namespace pilot
