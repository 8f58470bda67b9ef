#include <CLI11.hpp>

#include "dfpower/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"dfpower: interim futility machinery for multiple-contrast dose-finding trials"};
    app.require_subcommand(1);

    dfpower::CliOptions opts;
    std::uint64_t seed = 0;
    int reps = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "scenario configuration file");
        sub->add_option("--seed", seed, "override simulation.base_seed")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--out", opts.out_dir, "output directory (default .)");
        sub->add_option("--threads", opts.threads, "worker threads (0 = hardware)");
        sub->add_option("--reps", reps, "override simulation.replications");
    };

    CLI::App* s_contrasts = app.add_subcommand("contrasts", "emit contrast matrix and critical value");
    CLI::App* s_critval = app.add_subcommand("critval", "emit the critical value only");
    CLI::App* s_power = app.add_subcommand("power", "interim metrics for a trial dataset");
    s_power->add_option("--data", opts.data_path, "trial dataset CSV")->required();
    CLI::App* s_simulate = app.add_subcommand("simulate", "run the scenario grid");
    CLI::App* s_calibrate = app.add_subcommand("calibrate", "thresholds from an existing rows.csv");
    s_calibrate->add_option("--rows", opts.rows_path, "rows.csv from a simulate run")->required();
    CLI::App* s_appendix = app.add_subcommand("appendix", "small-trial information fraction curves");
    CLI::App* s_print = app.add_subcommand("print-config", "print the effective configuration");

    for (CLI::App* sub : {s_contrasts, s_critval, s_power, s_simulate, s_calibrate, s_appendix, s_print}) {
        add_common(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    opts.command = sub->get_name();
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--reps")) opts.reps = reps;
    return dfpower::run_command(opts);
}
