#include <aipid/cli.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> sets;
};

void add_common(CLI::App *cmd, CommonArgs &args) {
    cmd->add_option("--config", args.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out, "Output directory")->required();
    cmd->add_option("--seed", args.seed, "Override sim.seed");
    cmd->add_option("--set", args.sets, "Override a config leaf, e.g. --set controller.kappa_x=20")
        ->expected(1, -1)
        ->allow_extra_args(false);
}

aipid::cli::RunManifest manifest_from(const CommonArgs &args) {
    aipid::cli::RunManifest m;
    m.config_path = args.config;
    m.output_dir = args.out;
    m.overrides = args.sets;
    m.seed = args.seed;
    return m;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Active-inference PID controller simulator"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, cmp_args, tune_args;
    auto *run = app.add_subcommand("run", "Simulate one scenario and write trace.csv and metrics.json");
    add_common(run, run_args);

    auto *sw = app.add_subcommand("sweep", "Run one scenario per value of a parameter and write sweep.csv");
    add_common(sw, sweep_args);
    std::string param;
    std::vector<double> values;
    sw->add_option("--param", param, "Dotted config path to vary")->required();
    sw->add_option("--values", values, "Values to try")->required()->delimiter(',');

    auto *cmp = app.add_subcommand("compare-pid", "Check clamp mode against a classical PID on the same errors");
    add_common(cmp, cmp_args);
    std::optional<double> tolerance;
    cmp->add_option("--tolerance", tolerance, "Maximum allowed |u_ai - u_pid| (default 1e-2)");

    auto *tn = app.add_subcommand("tune", "Run with precision learning and report the gain trajectory");
    add_common(tn, tune_args);

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        auto m = manifest_from(run_args);
        return aipid::cli::cmd_run(m, std::cerr);
    }
    if (sw->parsed()) {
        auto m = manifest_from(sweep_args);
        return aipid::cli::cmd_sweep(m, param, values, std::cerr);
    }
    if (cmp->parsed()) {
        auto m = manifest_from(cmp_args);
        m.tolerance = tolerance;
        return aipid::cli::cmd_compare_pid(m, std::cerr);
    }
    auto m = manifest_from(tune_args);
    return aipid::cli::cmd_tune(m, std::cerr);
}
