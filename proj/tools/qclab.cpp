#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "qcl/cli.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<int> grid;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Options& o, bool needs_out) {
    sub->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    auto* out = sub->add_option("--out", o.out, "artifact directory");
    if (needs_out) out->required();
    sub->add_option("--grid", o.grid, "grid size override")->check(CLI::Range(8, 4096));
    sub->add_option("--seed", o.seed, "seed override");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace qcl::cli;
    CLI::App app{"Numerical lab for quasilinear conductivity inverse problems"};
    app.require_subcommand(1);
    Options opts;
    for (const auto& cmd : run_commands()) add_common(app.add_subcommand(cmd, "run the " + cmd + " experiment"), opts, true);
    add_common(app.add_subcommand("validate", "check a config without running solves"), opts, false);
    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "validate") {
        nlohmann::json diags;
        try {
            const ExperimentConfig cfg = load_config(opts.config, "", opts.grid, opts.seed);
            diags = to_json(validate(cfg.raw, cfg.base_dir, cfg.command));
        } catch (const ConfigError& e) {
            std::ifstream is(opts.config);
            nlohmann::json raw = nlohmann::json::parse(is, nullptr, false);
            if (raw.is_discarded()) {
                diags = to_json({{"error", e.what()}});
            } else {
                if (opts.grid) raw["grid"] = *opts.grid;
                diags = to_json(validate(raw, std::filesystem::path(opts.config).parent_path()));
            }
        }
        std::cout << diags.dump(2) << '\n';
        return exit_ok;
    }

    try {
        const ExperimentConfig cfg = load_config(opts.config, command, opts.grid, opts.seed);
        const RunOutcome outcome = run(cfg, opts.out);
        std::cout << outcome.report.dump(2) << '\n';
        return outcome.exit_code;
    } catch (const ConfigError& e) {
        std::cout << error_json("config", "config error", e.what()).dump(2) << '\n';
        return exit_config;
    }
}
