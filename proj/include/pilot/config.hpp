// SPDX-License-Identifier: Apache-2.0

#ifndef PILOT_CONFIG_HPP
#define PILOT_CONFIG_HPP

#include "pilot/channel.hpp"
#include "pilot/optimizers.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pilot {

inline constexpr int format_version = 1;

struct SimulationSettings {
    int realizations = 0; // 0 disables the Monte Carlo column in design output
    double data_power = 0.0;
    bool include_data_interference = false;
    bool random_pilot_phases = false;
};

/// One experiment description. List-valued axes remember whether the file
/// gave a list, which is what makes them sweep axes.
struct ExperimentConfig {
    GridConfig grid;
    ScatteringSpec scattering; // spreading_factor is overridden per axis value
    std::vector<double> spreading_factors{1e-3};
    std::vector<double> snr_db{10.0};
    std::optional<int> budget = 14;
    std::vector<double> densities; // used when budget is empty
    std::optional<double> beta;
    std::vector<Method> methods{Method::relax_round_swap, Method::greedy_swap};
    std::vector<std::uint64_t> seeds{1};
    int roundings = 50;
    int max_swap_passes = 100;
    RelaxationOptions relaxation;
    SimulationSettings simulation;
    std::string output_dir = "out";
    bool record_wall_time = false;
    int threads = 1;

    bool spreading_is_list = false;
    bool snr_is_list = false;
    bool density_is_list = false;

    /// Budgets in axis order: {budget} or one per density.
    std::vector<int> budgets() const;
    void validate() const;
};

/// Parses JSON text. Syntax errors report line and column; semantic errors
/// report the offending key path. Both throw Error(Errc::config).
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Resolved config with every field present.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Rounds to 12 significant digits so serialized output is stable.
double round12(double x);

/// Writes pretty JSON with sorted keys; throws Error(Errc::io) with the path.
void write_json_file(const std::string& path, const nlohmann::json& value);
void write_text_file(const std::string& path, const std::string& text);

} // namespace pilot

#endif
