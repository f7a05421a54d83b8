// SPDX-License-Identifier: Apache-2.0

#include "pilot/error.hpp"

namespace pilot {

const char* to_string(Errc code) noexcept {
    switch (code) {
    case Errc::invalid_spec: return "invalid-spec";
    case Errc::invalid_budget: return "invalid-budget";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::invalid_candidate: return "invalid-candidate";
    case Errc::numeric: return "numeric";
    case Errc::infeasible_allocation: return "infeasible-allocation";
    case Errc::invalid_params: return "invalid-params";
    case Errc::no_feasible_lattice: return "no-feasible-lattice";
    case Errc::complexity_guard: return "complexity-guard";
    case Errc::config: return "config";
    case Errc::io: return "io";
    }
    return "unknown";
}

} // namespace pilot
