// SPDX-License-Identifier: Apache-2.0

#include "pilot/experiments.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

struct Args {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    std::vector<std::string> methods;
};

void add_common(CLI::App* sub, Args& args, bool config_required) {
    auto* opt = sub->add_option("--config", args.config, "experiment config (JSON)");
    if (config_required) opt->required();
    sub->add_option("--seed", args.seed, "override the seed list with one seed");
    sub->add_option("--out", args.out, "output directory");
    sub->add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--method", args.methods, "method to run (repeatable)");
}

int run(const std::string& command, const Args& args) {
    pilot::ExperimentConfig cfg = args.config.empty() ? pilot::ExperimentConfig{} : pilot::load_config(args.config);
    pilot::Overrides o;
    o.seed = args.seed;
    o.output_dir = args.out;
    o.threads = args.threads;
    for (const auto& name : args.methods) {
        const auto m = pilot::parse_method(name);
        if (!m) throw pilot::Error(pilot::Errc::config, "--method: unknown method \"" + name + "\"");
        o.methods.push_back(*m);
    }
    pilot::apply_overrides(cfg, o);

    if (command == "design") return pilot::cmd_design(cfg, std::cout);
    if (command == "sweep") return pilot::cmd_sweep(cfg, std::cout);
    if (command == "structure") return pilot::cmd_structure(cfg, std::cout);
    return pilot::cmd_validate(cfg, std::cout);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pilot pattern design for OFDM over doubly dispersive channels"};
    app.require_subcommand(1);
    Args args;
    std::string command;
    const std::pair<const char*, const char*> subs[] = {
        {"design", "design patterns with each method for one configuration"},
        {"sweep", "sweep density, SNR or spreading factor and write CSV"},
        {"structure", "designed patterns and their dispersion along an SNR or spreading axis"},
        {"validate", "run the acceptance checks"},
    };
    for (const auto& [name, help] : subs) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub, args, false);
        sub->callback([&command, name = std::string(name)] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : pilot::exit_invalid_config;
    }

    try {
        return run(command, args);
    } catch (const pilot::Error& e) {
        std::cerr << "error (" << pilot::to_string(e.code()) << "): " << e.what() << "\n";
        return pilot::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return pilot::exit_check_failed;
    }
}
