// SPDX-License-Identifier: Apache-2.0

#include "pilot/experiments.hpp"

#include "pilot/mcsim.hpp"
#include "pilot/rng.hpp"
#include "pilot/validation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace pilot {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(Errc code) noexcept {
    switch (code) {
    case Errc::io:
        return exit_io;
    case Errc::config:
    case Errc::invalid_spec:
    case Errc::invalid_budget:
    case Errc::invalid_params:
    case Errc::dimension_mismatch:
        return exit_invalid_config;
    default:
        return exit_check_failed;
    }
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
    if (o.seed) cfg.seeds = {*o.seed};
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    if (o.threads) cfg.threads = *o.threads;
    if (!o.methods.empty()) cfg.methods = o.methods;
}

namespace {

bool needs_relaxation(Method m) {
    return m == Method::fractional || m == Method::relax_round || m == Method::relax_round_swap;
}

bool needs_greedy(Method m) { return m == Method::greedy || m == Method::greedy_swap; }

PilotPattern random_pattern(const GridConfig& grid, int K, std::uint64_t seed) {
    std::vector<std::size_t> all(grid.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
        const auto pick = k + static_cast<std::size_t>(rng.uniform() * static_cast<double>(all.size() - k));
        std::swap(all[k], all[pick]);
    }
    all.resize(static_cast<std::size_t>(K));
    return PilotPattern(grid, std::move(all));
}

/// K largest weights, lower index first on ties.
PilotPattern top_weights(const FractionalAllocation& a) {
    std::vector<std::size_t> order(a.grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return a.weights(static_cast<Eigen::Index>(x)) > a.weights(static_cast<Eigen::Index>(y));
    });
    order.resize(static_cast<std::size_t>(a.budget));
    return PilotPattern(a.grid, std::move(order));
}

std::string format_sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

std::string format_num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(Errc::io, "cannot create output directory " + dir);
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

struct StatsCache {
    const ExperimentConfig& cfg;
    std::map<double, ChannelStatistics> entries;

    const ChannelStatistics& get(double spreading) {
        auto it = entries.find(spreading);
        if (it == entries.end()) {
            ScatteringSpec spec = cfg.scattering;
            spec.spreading_factor = spreading;
            it = entries.emplace(spreading, build_statistics(cfg.grid, spec)).first;
        }
        return it->second;
    }
};

/// Fields shared by every per-pattern JSON record.
json report_json(const MethodOutcome& o, std::uint64_t seed, bool record_wall_time) {
    const DesignReport& r = *o.report;
    json j = pattern_to_json(r.pattern);
    j["K"] = static_cast<int>(r.pattern.size());
    j["method"] = to_string(o.method);
    j["seed"] = seed;
    j["objective"] = round12(r.objective);
    j["average_mse"] = round12(r.average_mse);
    j["swap_iterations"] = r.swap_iterations;
    j["wall_time"] = record_wall_time ? round12(r.wall_time.count()) : 0.0;
    if (r.lattice) {
        j["lattice"] = json{{"freq_spacing", r.lattice->freq_spacing}, {"time_spacing", r.lattice->time_spacing},
                            {"freq_offset", r.lattice->freq_offset},   {"time_offset", r.lattice->time_offset},
                            {"staggered", r.lattice->staggered},       {"wrap", r.lattice->wrap}};
    }
    if (o.relaxation) {
        json w = json::array();
        for (Eigen::Index k = 0; k < o.relaxation->allocation.weights.size(); ++k) {
            w.push_back(round12(o.relaxation->allocation.weights(k)));
        }
        j["weights"] = w;
        j["relaxation_iterations"] = o.relaxation->iterations;
        j["relaxation_converged"] = o.relaxation->converged;
    }
    return j;
}

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || count < 2) {
        for (std::size_t k = 0; k < count; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < count; k = next++) fn(k);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace

std::string method_slug(Method m) {
    std::string s = to_string(m);
    std::replace(s.begin(), s.end(), '+', '_');
    return s;
}

std::vector<MethodOutcome> run_methods(const DesignProblem& problem, const std::vector<Method>& methods,
                                       const ExperimentConfig& cfg, std::uint64_t seed) {
    PipelineOptions popts;
    popts.relaxation = std::any_of(methods.begin(), methods.end(), needs_relaxation);
    popts.greedy = std::any_of(methods.begin(), methods.end(), needs_greedy);
    popts.roundings = cfg.roundings;
    popts.max_swap_passes = cfg.max_swap_passes;
    popts.relaxation_options = cfg.relaxation;
    popts.seed = seed;

    std::optional<PipelineResult> pipes;
    std::optional<Error> pipe_error;
    if (popts.relaxation || popts.greedy) {
        try {
            pipes = run_pipelines(problem, popts);
        } catch (const Error& e) {
            pipe_error = e;
        }
    }

    std::vector<MethodOutcome> out;
    for (Method m : methods) {
        MethodOutcome o;
        o.method = m;
        try {
            if (needs_relaxation(m) || needs_greedy(m)) {
                if (pipe_error) throw *pipe_error;
            }
            switch (m) {
            case Method::fractional: {
                o.relaxation = pipes->relaxation;
                DesignReport r;
                r.method = m;
                r.pattern = top_weights(o.relaxation->allocation);
                r.budget = problem.budget;
                r.alpha = problem.alpha;
                r.objective = o.relaxation->objective;
                r.initial_objective = r.objective;
                r.average_mse = average_mse(problem, r.objective);
                r.converged = o.relaxation->converged;
                o.report = std::move(r);
                break;
            }
            case Method::relax_round:
                o.report = pipes->relax_round;
                o.draws = pipes->draws;
                break;
            case Method::relax_round_swap:
                o.report = pipes->relax_round_swap;
                o.draws = pipes->draws;
                break;
            case Method::greedy:
                o.report = pipes->greedy;
                break;
            case Method::greedy_swap:
                o.report = pipes->greedy_swap;
                break;
            case Method::local_swap:
                o.report = local_swap(problem, random_pattern(problem.grid, problem.budget, mix_seed(seed, 11)),
                                      cfg.max_swap_passes);
                break;
            case Method::rect:
                o.report = best_lattice(problem, LatticeShape::rectangular);
                break;
            case Method::diamond:
                o.report = best_lattice(problem, LatticeShape::diamond);
                break;
            case Method::exhaustive:
                o.report = exhaustive_search(problem);
                break;
            }
            o.report->method = m;
        } catch (const Error& e) {
            o.report.reset();
            o.error = e;
        }
        out.push_back(std::move(o));
    }
    return out;
}

std::string render_pattern(const PilotPattern& pattern, const std::string& title, double mse) {
    const GridConfig& g = pattern.grid();
    std::ostringstream os;
    os << title << "\n";
    for (int m = 0; m < g.M; ++m) {
        for (int n = 0; n < g.N; ++n) os << (n ? " " : "") << (pattern.contains(g.index(m, n)) ? 'X' : '.');
        os << "\n";
    }
    os << "MSE = " << format_sci(mse) << "\n";
    return os.str();
}

std::string render_allocation(const Eigen::VectorXd& weights, const GridConfig& g, const std::string& title,
                              double mse) {
    std::ostringstream os;
    os << title << "\n";
    for (int m = 0; m < g.M; ++m) {
        for (int n = 0; n < g.N; ++n) {
            const double w = weights(static_cast<Eigen::Index>(g.index(m, n)));
            const long tenths = std::lround(w * 10.0);
            char c = '.';
            if (tenths >= 10) {
                c = 'X';
            } else if (tenths > 0) {
                c = static_cast<char>('0' + tenths);
            }
            os << (n ? " " : "") << c;
        }
        os << "\n";
    }
    os << "MSE = " << format_sci(mse) << "\n";
    return os.str();
}

json pattern_to_json(const PilotPattern& pattern) {
    return json{{"M", pattern.grid().M}, {"N", pattern.grid().N}, {"indices", pattern.indices()}};
}

PilotPattern pattern_from_json(const json& j) {
    try {
        GridConfig grid{j.at("M").get<int>(), j.at("N").get<int>()};
        grid.validate();
        return PilotPattern(grid, j.at("indices").get<std::vector<std::size_t>>());
    } catch (const json::exception& e) {
        throw Error(Errc::config, std::string("pattern file: ") + e.what());
    }
}

PilotPattern load_pattern_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open pattern file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return pattern_from_json(json::parse(text.str()));
    } catch (const json::parse_error& e) {
        throw Error(Errc::config, path + ": " + e.what());
    }
}

int cmd_design(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    if (cfg.spreading_factors.size() != 1 || cfg.snr_db.size() != 1 || cfg.budgets().size() != 1) {
        throw Error(Errc::config, "design: spreading_factor, snr_db and budget/density must each be a single value");
    }
    const auto stats = build_statistics(cfg.grid, [&] {
        ScatteringSpec s = cfg.scattering;
        s.spreading_factor = cfg.spreading_factors.front();
        return s;
    }());
    for (const auto& w : stats.warnings) log << "warning: " << w << "\n";
    const auto problem = DesignProblem::from_statistics(stats, cfg.budgets().front(), cfg.snr_db.front(), cfg.beta);
    ensure_dir(cfg.output_dir);
    const json config = to_json(cfg);

    json manifest{{"config", config}, {"format_version", format_version}, {"effective_rank", stats.effective_rank},
                  {"alpha", round12(problem.alpha)}, {"files", json::array()}, {"errors", json::array()}};
    std::string panels;
    int produced = 0;
    int first_error = exit_ok;
    for (std::uint64_t seed : cfg.seeds) {
        const std::string suffix = cfg.seeds.size() > 1 ? "_seed" + std::to_string(seed) : "";
        for (const auto& o : run_methods(problem, cfg.methods, cfg, seed)) {
            const std::string name = to_string(o.method);
            if (o.error) {
                log << name << ": " << to_string(o.error->code()) << ": " << o.error->what() << "\n";
                manifest["errors"].push_back(json{{"method", name},
                                                  {"seed", seed},
                                                  {"code", to_string(o.error->code())},
                                                  {"message", o.error->what()}});
                if (first_error == exit_ok) first_error = exit_code_for(o.error->code());
                continue;
            }
            json j = report_json(o, seed, cfg.record_wall_time);
            j["config"] = config;
            j["format_version"] = format_version;
            std::string title = name + " (K=" + std::to_string(o.report->pattern.size()) + ", seed " +
                                std::to_string(seed) + ")";
            if (cfg.simulation.realizations > 0 && o.method != Method::fractional) {
                SimConfig sim;
                sim.realizations = cfg.simulation.realizations;
                sim.rng_seed = mix_seed(seed, 12);
                sim.data_power = cfg.simulation.data_power;
                sim.noise_var = problem.noise_var;
                sim.include_data_interference = cfg.simulation.include_data_interference;
                sim.random_pilot_phases = cfg.simulation.random_pilot_phases;
                sim.threads = cfg.threads;
                const DesignProblem used = problem.with_budget(static_cast<int>(o.report->pattern.size()));
                const auto res = run_simulation(stats, used, o.report->pattern, sim);
                j["simulation"] = json{{"empirical_mse", round12(res.empirical_mse)},
                                       {"analytic_mse", round12(res.analytic_mse)},
                                       {"standard_error", round12(res.standard_error)},
                                       {"realizations", res.realizations}};
            }
            const std::string panel = o.relaxation ? render_allocation(o.relaxation->allocation.weights, cfg.grid,
                                                                       title, o.report->average_mse)
                                                   : render_pattern(o.report->pattern, title, o.report->average_mse);
            const std::string stem = method_slug(o.method) + suffix;
            write_json_file(path_in(cfg.output_dir, stem + ".json"), j);
            write_text_file(path_in(cfg.output_dir, stem + ".txt"), panel);
            manifest["files"].push_back(stem + ".json");
            panels += panel + "\n";
            log << name << ": objective " << format_num(o.report->objective) << ", average MSE "
                << format_sci(o.report->average_mse) << "\n";
            ++produced;
        }
    }
    write_text_file(path_in(cfg.output_dir, "panels.txt"), panels);
    write_json_file(path_in(cfg.output_dir, "design.json"), manifest);
    return produced > 0 ? exit_ok : first_error;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    if (!cfg.spreading_is_list && !cfg.snr_is_list && !cfg.density_is_list) {
        throw Error(Errc::config, "sweep: give a list for density, snr_db or scattering.spreading_factor");
    }
    ensure_dir(cfg.output_dir);

    struct Point {
        double spreading;
        double snr;
        std::size_t budget_index;
        std::uint64_t seed;
    };
    std::vector<Point> points;
    const auto budgets = cfg.budgets();
    for (double sf : cfg.spreading_factors) {
        for (double snr : cfg.snr_db) {
            for (std::size_t b = 0; b < budgets.size(); ++b) {
                for (auto seed : cfg.seeds) points.push_back({sf, snr, b, seed});
            }
        }
    }

    StatsCache cache{cfg, {}};
    for (double sf : cfg.spreading_factors) {
        for (const auto& w : cache.get(sf).warnings) log << "warning: " << w << "\n";
    }

    // Workers fill their own slot; rows are written afterwards in point order.
    std::vector<std::vector<MethodOutcome>> results(points.size());
    parallel_for(points.size(), cfg.threads, [&](std::size_t k) {
        const Point& p = points[k];
        const auto problem =
            DesignProblem::from_statistics(cache.entries.at(p.spreading), budgets[p.budget_index], p.snr, cfg.beta);
        results[k] = run_methods(problem, cfg.methods, cfg, p.seed);
    });

    std::vector<std::string> axis_names;
    if (cfg.spreading_is_list) axis_names.push_back("spreading_factor");
    if (cfg.snr_is_list) axis_names.push_back("snr_db");
    if (cfg.density_is_list) axis_names.push_back("density");
    if (!cfg.budget && !cfg.density_is_list) axis_names.push_back("density");

    std::ostringstream csv;
    for (const auto& a : axis_names) csv << a << ",";
    csv << "method,seed,draw,K,objective,average_mse,swap_iterations,wall_time\r\n";
    json errors = json::array();
    std::size_t rows = 0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        const Point& p = points[k];
        std::ostringstream axes;
        for (const auto& a : axis_names) {
            if (a == "spreading_factor") axes << format_num(p.spreading) << ",";
            if (a == "snr_db") axes << format_num(p.snr) << ",";
            if (a == "density") axes << format_num(cfg.densities[p.budget_index]) << ",";
        }
        for (const auto& o : results[k]) {
            const std::string name = to_string(o.method);
            if (o.error) {
                csv << axes.str() << name << "," << p.seed << ",," << budgets[p.budget_index] << ",,,,\r\n";
                errors.push_back(json{{"point", k}, {"method", name}, {"seed", p.seed},
                                      {"code", to_string(o.error->code())}, {"message", o.error->what()}});
                ++rows;
                continue;
            }
            const DesignReport& r = *o.report;
            const double wall = cfg.record_wall_time ? r.wall_time.count() : 0.0;
            csv << axes.str() << name << "," << p.seed << ",," << r.pattern.size() << "," << format_num(r.objective)
                << "," << format_num(r.average_mse) << "," << r.swap_iterations << "," << format_num(wall) << "\r\n";
            ++rows;
            if (o.method == Method::relax_round && !o.draws.empty()) {
                const double P = static_cast<double>(cfg.grid.size());
                const double floor = cache.entries.at(p.spreading).truncation_floor();
                for (std::size_t d = 0; d < o.draws.size(); ++d) {
                    csv << axes.str() << "relax+round draw," << p.seed << "," << d << "," << r.pattern.size() << ","
                        << format_num(o.draws[d].objective) << "," << format_num((o.draws[d].objective + floor) / P)
                        << ",0,0\r\n";
                    ++rows;
                }
            }
        }
    }
    write_text_file(path_in(cfg.output_dir, "sweep.csv"), csv.str());
    write_json_file(path_in(cfg.output_dir, "sweep.json"),
                    json{{"config", to_json(cfg)},
                         {"format_version", format_version},
                         {"csv", "sweep.csv"},
                         {"rows", rows},
                         {"errors", errors}});
    log << "wrote " << rows << " rows to " << path_in(cfg.output_dir, "sweep.csv") << "\n";
    return exit_ok;
}

int cmd_structure(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    if (cfg.budgets().size() != 1) throw Error(Errc::config, "structure: the pilot budget must be a single value");
    if (!cfg.spreading_is_list && !cfg.snr_is_list) {
        throw Error(Errc::config, "structure: give a list for snr_db or scattering.spreading_factor");
    }
    ensure_dir(cfg.output_dir);
    StatsCache cache{cfg, {}};
    const json config = to_json(cfg);
    json entries = json::array();
    json errors = json::array();
    std::string text;
    for (double sf : cfg.spreading_factors) {
        const auto& stats = cache.get(sf);
        for (const auto& w : stats.warnings) log << "warning: " << w << "\n";
        for (double snr : cfg.snr_db) {
            const auto problem = DesignProblem::from_statistics(stats, cfg.budgets().front(), snr, cfg.beta);
            for (auto seed : cfg.seeds) {
                for (const auto& o : run_methods(problem, cfg.methods, cfg, seed)) {
                    const std::string name = to_string(o.method);
                    if (o.error) {
                        errors.push_back(json{{"spreading_factor", round12(sf)}, {"snr_db", round12(snr)},
                                              {"method", name}, {"seed", seed},
                                              {"code", to_string(o.error->code())}, {"message", o.error->what()}});
                        log << name << ": " << o.error->what() << "\n";
                        continue;
                    }
                    json j = report_json(o, seed, cfg.record_wall_time);
                    j.erase("weights");
                    j["spreading_factor"] = round12(sf);
                    j["snr_db"] = round12(snr);
                    const auto dispersion = mean_nearest_neighbor_distance(o.report->pattern);
                    j["dispersion"] = dispersion ? json(round12(*dispersion)) : json();
                    entries.push_back(j);

                    std::string title = name + " (K=" + std::to_string(o.report->pattern.size()) +
                                        ", spreading " + format_num(sf) + ", SNR " + format_num(snr) + " dB, seed " +
                                        std::to_string(seed) + ")";
                    text += render_pattern(o.report->pattern, title, o.report->average_mse);
                    text += "dispersion = " + (dispersion ? format_num(round12(*dispersion)) : std::string("null")) +
                            "\n\n";
                    log << title << ": dispersion "
                        << (dispersion ? format_num(round12(*dispersion)) : std::string("null")) << "\n";
                }
            }
        }
    }
    write_text_file(path_in(cfg.output_dir, "structure.txt"), text);
    write_json_file(path_in(cfg.output_dir, "structure.json"),
                    json{{"config", config}, {"format_version", format_version}, {"entries", entries},
                         {"errors", errors}});
    return exit_ok;
}

int cmd_validate(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    ensure_dir(cfg.output_dir);
    ValidationOptions opts;
    opts.seed = cfg.seeds.front();
    opts.threads = cfg.threads;
    const auto results = run_checks(opts, [&](const CheckResult& r) { log << format_check_line(r) << std::endl; });

    bool passed = true;
    json checks = json::array();
    for (const auto& r : results) {
        if (!r.manual) passed = passed && r.passed;
        checks.push_back(json{{"id", r.id},
                              {"name", r.name},
                              {"status", r.manual ? "manual" : (r.passed ? "pass" : "fail")},
                              {"detail", r.detail},
                              {"seconds", round12(r.seconds)},
                              {"budget_seconds", round12(r.budget_seconds)}});
    }
    write_json_file(path_in(cfg.output_dir, "validate.json"),
                    json{{"config", to_json(cfg)},
                         {"format_version", format_version},
                         {"seed", opts.seed},
                         {"passed", passed},
                         {"checks", checks}});
    log << (passed ? "all automatic checks passed" : "some automatic checks failed") << "\n";
    return passed ? exit_ok : exit_check_failed;
}

} // namespace pilot
