// SPDX-License-Identifier: Apache-2.0

#ifndef PILOT_ERROR_HPP
#define PILOT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pilot {

enum class Errc {
    invalid_spec,
    invalid_budget,
    dimension_mismatch,
    invalid_candidate,
    numeric,
    infeasible_allocation,
    invalid_params,
    no_feasible_lattice,
    complexity_guard,
    config,
    io,
};

const char* to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace pilot

#endif
