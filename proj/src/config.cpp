// SPDX-License-Identifier: Apache-2.0

#include "pilot/config.hpp"

#include "pilot/error.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace pilot {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error(Errc::config, path + ": " + what);
}

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& known) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
    }
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

int get_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < -2147483647 || x > 2147483647) fail(path, "integer out of range");
    return static_cast<int>(x);
}

bool get_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

/// A number or a non-empty list of numbers; returns whether it was a list.
bool get_number_list(const json& v, const std::string& path, std::vector<double>& out) {
    out.clear();
    if (v.is_array()) {
        if (v.empty()) fail(path, "list must not be empty");
        for (std::size_t k = 0; k < v.size(); ++k) {
            out.push_back(get_number(v[k], path + "[" + std::to_string(k) + "]"));
        }
        return true;
    }
    out.push_back(get_number(v, path));
    return false;
}

void parse_grid(const json& v, const std::string& path, GridConfig& grid) {
    if (!v.is_object()) fail(path, "expected an object");
    reject_unknown(v, path, {"M", "N"});
    if (v.contains("M")) grid.M = get_int(v["M"], join(path, "M"));
    if (v.contains("N")) grid.N = get_int(v["N"], join(path, "N"));
}

void parse_scattering(const json& v, const std::string& path, ExperimentConfig& cfg) {
    if (!v.is_object()) fail(path, "expected an object");
    reject_unknown(v, path,
                   {"spreading_factor", "time_bandwidth", "delay_spread", "doppler_spread", "delay_profile",
                    "rms_fraction", "doppler_spectrum", "rank_energy_threshold"});
    ScatteringSpec& s = cfg.scattering;
    if (v.contains("spreading_factor")) {
        cfg.spreading_is_list =
            get_number_list(v["spreading_factor"], join(path, "spreading_factor"), cfg.spreading_factors);
    }
    if (v.contains("time_bandwidth")) s.time_bandwidth = get_number(v["time_bandwidth"], join(path, "time_bandwidth"));
    if (v.contains("delay_spread") && !v["delay_spread"].is_null()) {
        s.delay_spread = get_number(v["delay_spread"], join(path, "delay_spread"));
    }
    if (v.contains("doppler_spread") && !v["doppler_spread"].is_null()) {
        s.doppler_spread = get_number(v["doppler_spread"], join(path, "doppler_spread"));
    }
    if (v.contains("delay_profile")) {
        const auto name = get_string(v["delay_profile"], join(path, "delay_profile"));
        if (name == "uniform") {
            s.delay_profile = DelayProfile::uniform;
        } else if (name == "truncated_exponential") {
            s.delay_profile = DelayProfile::truncated_exponential;
        } else {
            fail(join(path, "delay_profile"),
                 "expected \"uniform\" or \"truncated_exponential\", got \"" + name + "\"");
        }
    }
    if (v.contains("rms_fraction")) s.rms_fraction = get_number(v["rms_fraction"], join(path, "rms_fraction"));
    if (v.contains("doppler_spectrum")) {
        const auto name = get_string(v["doppler_spectrum"], join(path, "doppler_spectrum"));
        if (name == "uniform") {
            s.doppler_spectrum = DopplerSpectrum::uniform;
        } else if (name == "jakes") {
            s.doppler_spectrum = DopplerSpectrum::jakes;
        } else {
            fail(join(path, "doppler_spectrum"), "expected \"uniform\" or \"jakes\", got \"" + name + "\"");
        }
    }
    if (v.contains("rank_energy_threshold")) {
        s.rank_energy_threshold = get_number(v["rank_energy_threshold"], join(path, "rank_energy_threshold"));
    }
}

void parse_relaxation(const json& v, const std::string& path, RelaxationOptions& r) {
    if (!v.is_object()) fail(path, "expected an object");
    reject_unknown(v, path, {"tol", "max_iters"});
    if (v.contains("tol")) r.tol = get_number(v["tol"], join(path, "tol"));
    if (v.contains("max_iters")) r.max_iters = get_int(v["max_iters"], join(path, "max_iters"));
}

void parse_simulation(const json& v, const std::string& path, SimulationSettings& s) {
    if (!v.is_object()) fail(path, "expected an object");
    reject_unknown(v, path, {"realizations", "data_power", "include_data_interference", "random_pilot_phases"});
    if (v.contains("realizations")) s.realizations = get_int(v["realizations"], join(path, "realizations"));
    if (v.contains("data_power")) s.data_power = get_number(v["data_power"], join(path, "data_power"));
    if (v.contains("include_data_interference")) {
        s.include_data_interference = get_bool(v["include_data_interference"], join(path, "include_data_interference"));
    }
    if (v.contains("random_pilot_phases")) {
        s.random_pilot_phases = get_bool(v["random_pilot_phases"], join(path, "random_pilot_phases"));
    }
}

std::string location(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t k = 0; k + 1 < byte && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

} // namespace

std::vector<int> ExperimentConfig::budgets() const {
    if (budget) return {*budget};
    std::vector<int> out;
    for (double d : densities) out.push_back(static_cast<int>(std::lround(d * static_cast<double>(grid.size()))));
    return out;
}

void ExperimentConfig::validate() const {
    try {
        grid.validate();
    } catch (const Error& e) {
        fail("grid", e.what());
    }
    for (std::size_t k = 0; k < spreading_factors.size(); ++k) {
        ScatteringSpec s = scattering;
        s.spreading_factor = spreading_factors[k];
        try {
            s.validate();
        } catch (const Error& e) {
            fail("scattering", e.what());
        }
    }
    for (double snr : snr_db) {
        if (!std::isfinite(snr)) fail("snr_db", "must be finite");
    }
    if (budget) {
        if (*budget < 1) throw Error(Errc::invalid_budget, "budget: K must be at least 1");
        if (static_cast<std::size_t>(*budget) > grid.size()) {
            throw Error(Errc::invalid_budget, "budget: K exceeds the grid size");
        }
    } else {
        if (densities.empty()) fail("density", "either budget or density is required");
        for (double d : densities) {
            if (!(d > 0.0 && d <= 1.0)) fail("density", "densities must lie in (0, 1]");
        }
        for (int K : budgets()) {
            if (K < 1) throw Error(Errc::invalid_budget, "density: rounds to K = 0 pilots");
        }
    }
    if (beta && !(*beta > 0.0 && *beta <= 1.0)) fail("beta", "must lie in (0, 1]");
    if (methods.empty()) fail("methods", "at least one method is required");
    if (seeds.empty()) fail("seeds", "at least one seed is required");
    if (roundings < 1) fail("roundings", "must be at least 1");
    if (max_swap_passes < 0) fail("max_swap_passes", "must be non-negative");
    if (!(relaxation.tol > 0.0)) fail("relaxation.tol", "must be positive");
    if (relaxation.max_iters < 1) fail("relaxation.max_iters", "must be at least 1");
    if (simulation.realizations < 0) fail("simulation.realizations", "must be non-negative");
    if (!(simulation.data_power >= 0.0)) fail("simulation.data_power", "must be non-negative");
    if (threads < 1) fail("threads", "must be at least 1");
    if (output_dir.empty()) fail("output_dir", "must not be empty");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::string msg = e.what();
        if (const auto at = msg.find("syntax error"); at != std::string::npos) msg = msg.substr(at);
        throw Error(Errc::config, source + ": " + location(text, e.byte) + ": " + msg);
    }
    if (!root.is_object()) throw Error(Errc::config, source + ": top level must be an object");
    reject_unknown(root, "",
                   {"format_version", "grid", "scattering", "snr_db", "budget", "density", "beta", "methods", "seeds",
                    "roundings", "max_swap_passes", "relaxation", "simulation", "output_dir", "record_wall_time",
                    "threads"});

    ExperimentConfig cfg;
    if (root.contains("format_version") && get_int(root["format_version"], "format_version") != format_version) {
        fail("format_version", "unsupported version");
    }
    if (root.contains("grid")) parse_grid(root["grid"], "grid", cfg.grid);
    if (root.contains("scattering")) parse_scattering(root["scattering"], "scattering", cfg);
    if (root.contains("snr_db")) cfg.snr_is_list = get_number_list(root["snr_db"], "snr_db", cfg.snr_db);
    if (root.contains("budget") && root.contains("density")) fail("density", "give either budget or density, not both");
    if (root.contains("budget")) cfg.budget = get_int(root["budget"], "budget");
    if (root.contains("density")) {
        cfg.budget.reset();
        cfg.density_is_list = get_number_list(root["density"], "density", cfg.densities);
    }
    if (root.contains("beta") && !root["beta"].is_null()) cfg.beta = get_number(root["beta"], "beta");
    if (root.contains("methods")) {
        const auto& m = root["methods"];
        if (!m.is_array()) fail("methods", "expected a list of method names");
        cfg.methods.clear();
        for (std::size_t k = 0; k < m.size(); ++k) {
            const std::string path = "methods[" + std::to_string(k) + "]";
            const auto name = get_string(m[k], path);
            const auto method = parse_method(name);
            if (!method) fail(path, "unknown method \"" + name + "\"");
            cfg.methods.push_back(*method);
        }
    }
    if (root.contains("seeds")) {
        const auto& s = root["seeds"];
        cfg.seeds.clear();
        if (s.is_array()) {
            for (std::size_t k = 0; k < s.size(); ++k) {
                const std::string path = "seeds[" + std::to_string(k) + "]";
                if (!s[k].is_number_unsigned()) fail(path, "expected a non-negative integer");
                cfg.seeds.push_back(s[k].get<std::uint64_t>());
            }
        } else {
            if (!s.is_number_unsigned()) fail("seeds", "expected a non-negative integer or a list of them");
            cfg.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    if (root.contains("roundings")) cfg.roundings = get_int(root["roundings"], "roundings");
    if (root.contains("max_swap_passes")) cfg.max_swap_passes = get_int(root["max_swap_passes"], "max_swap_passes");
    if (root.contains("relaxation")) parse_relaxation(root["relaxation"], "relaxation", cfg.relaxation);
    if (root.contains("simulation")) parse_simulation(root["simulation"], "simulation", cfg.simulation);
    if (root.contains("output_dir")) cfg.output_dir = get_string(root["output_dir"], "output_dir");
    if (root.contains("record_wall_time")) {
        cfg.record_wall_time = get_bool(root["record_wall_time"], "record_wall_time");
    }
    if (root.contains("threads")) cfg.threads = get_int(root["threads"], "threads");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path);
}

double round12(double x) {
    if (!std::isfinite(x) || x == 0.0) return x;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    using oj = nlohmann::json;
    auto numbers = [](const std::vector<double>& v, bool list) {
        if (!list) return oj(round12(v.front()));
        oj out = oj::array();
        for (double x : v) out.push_back(round12(x));
        return out;
    };
    const ScatteringSpec& s = cfg.scattering;
    oj scattering{
        {"delay_profile", to_string(s.delay_profile)},
        {"delay_spread", s.delay_spread ? oj(round12(*s.delay_spread)) : oj()},
        {"doppler_spectrum", to_string(s.doppler_spectrum)},
        {"doppler_spread", s.doppler_spread ? oj(round12(*s.doppler_spread)) : oj()},
        {"rank_energy_threshold", round12(s.rank_energy_threshold)},
        {"rms_fraction", round12(s.rms_fraction)},
        {"spreading_factor", numbers(cfg.spreading_factors, cfg.spreading_is_list)},
        {"time_bandwidth", round12(s.time_bandwidth)},
    };
    oj methods = oj::array();
    for (auto m : cfg.methods) methods.push_back(to_string(m));
    oj out{
        {"beta", cfg.beta ? oj(round12(*cfg.beta)) : oj()},
    };
    if (cfg.budget) {
        out["budget"] = *cfg.budget;
    } else {
        out["density"] = numbers(cfg.densities, cfg.density_is_list);
    }
    out["format_version"] = format_version;
    out["grid"] = oj{{"M", cfg.grid.M}, {"N", cfg.grid.N}};
    out["max_swap_passes"] = cfg.max_swap_passes;
    out["methods"] = methods;
    out["output_dir"] = cfg.output_dir;
    out["record_wall_time"] = cfg.record_wall_time;
    out["relaxation"] = oj{{"max_iters", cfg.relaxation.max_iters}, {"tol", round12(cfg.relaxation.tol)}};
    out["roundings"] = cfg.roundings;
    out["scattering"] = scattering;
    out["seeds"] = cfg.seeds;
    out["simulation"] = oj{
        {"data_power", round12(cfg.simulation.data_power)},
        {"include_data_interference", cfg.simulation.include_data_interference},
        {"random_pilot_phases", cfg.simulation.random_pilot_phases},
        {"realizations", cfg.simulation.realizations},
    };
    out["snr_db"] = numbers(cfg.snr_db, cfg.snr_is_list);
    out["threads"] = cfg.threads;
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + path);
    out << text;
    out.flush();
    if (!out) throw Error(Errc::io, "write failed for " + path);
}

void write_json_file(const std::string& path, const nlohmann::json& value) {
    // nlohmann::json keeps object keys in a std::map, so keys come out sorted.
    write_text_file(path, value.dump(2) + "\n");
}

} // namespace pilot
