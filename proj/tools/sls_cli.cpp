#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sls/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Scaled least squares estimation for linear combinations of non-linear regressions"};
    app.require_subcommand(1);

    struct Flags {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::optional<unsigned> threads;
        std::optional<std::string> out;
        bool full_grid = false;
    } flags;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", flags.config, "JSON config file");
        if (config_required) opt->required();
        sub->add_option("--seed", flags.seed, "override the master seed");
        sub->add_option("--threads", flags.threads, "worker thread cap");
        sub->add_option("--out", flags.out, "override the primary output path");
    };
    auto* generate = app.add_subcommand("generate", "draw a synthetic dataset");
    auto* estimate = app.add_subcommand("estimate", "run the SLS estimator on a dataset file");
    auto* experiment = app.add_subcommand("experiment", "run a convergence sweep and write CSV/SVG");
    auto* verify = app.add_subcommand("verify", "run the theory oracles");
    add_common(generate, true);
    add_common(estimate, true);
    add_common(experiment, true);
    add_common(verify, false);
    experiment->add_flag("--full-grid", flags.full_grid, "use the full-size n / |S| grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : sls::exit_config_error;
    }

    sls::Command command = sls::Command::Verify;
    if (*generate) command = sls::Command::Generate;
    if (*estimate) command = sls::Command::Estimate;
    if (*experiment) command = sls::Command::Experiment;

    std::string text;
    if (flags.config.empty()) {
        text = R"({"verify": {}})";
    } else {
        try {
            text = sls::read_text_file(flags.config);
        } catch (const sls::IoError& e) {
            std::cerr << "I/O error: " << e.what() << '\n';
            return sls::exit_io_error;
        }
    }
    sls::Overrides ov{flags.seed, flags.threads, flags.out, flags.full_grid};
    return sls::run_text(command, text, ov);
}
