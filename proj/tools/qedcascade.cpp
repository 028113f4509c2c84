#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qedcascade/cli.hpp"

namespace {

void add_overrides(CLI::App* cmd, qedc::cli::Overrides& o, std::optional<std::string>& out) {
    cmd->add_option("--seed", o.seed, "Master seed (overrides run.seed)");
    cmd->add_option("--trajectories", o.trajectories, "Trajectory count (overrides run.trajectories)");
    cmd->add_option("--threads", o.threads, "Worker threads; results do not depend on this");
    cmd->add_option("--out", out, "Output directory (overrides output.dir)");
    cmd->add_flag("--allow-unphysical", o.allow_unphysical, "Run scenarios rejected by the noise-limit validators");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace qedc::cli;
    CLI::App app{"qedcascade: source -> amplifier -> photodetector noise simulator"};
    app.set_version_flag("--version", QEDC_VERSION);
    app.require_subcommand(1);

    RunArgs run;
    std::optional<std::string> run_out;
    auto* run_cmd = app.add_subcommand("run", "Simulate a scenario and write CSV results with a manifest");
    run_cmd->add_option("config", run.config, "Scenario configuration (JSON)")->required();
    add_overrides(run_cmd, run.overrides, run_out);
    run_cmd->add_flag("--check", run.check, "Recompute all outputs and verify them against the manifest");

    std::string validate_config;
    auto* validate_cmd = app.add_subcommand("validate", "Check a scenario against the quantum noise limits");
    validate_cmd->add_option("config", validate_config, "Scenario configuration (JSON)")->required();

    ComposeArgs compose;
    auto* compose_cmd = app.add_subcommand("compose", "Run the phase-space identity suite on table fixtures");
    compose_cmd->add_option("fixtures", compose.fixtures, "Fixture file or directory of fixtures")->required();

    SweepArgs sweep;
    std::optional<std::string> sweep_out;
    auto* sweep_cmd = app.add_subcommand("sweep", "Tabulate the spectrum at one frequency against a parameter");
    sweep_cmd->add_option("config", sweep.config, "Scenario configuration (JSON)")->required();
    sweep_cmd->add_option("--param", sweep.parameter, "One of T_a, n_a, eta, n0, gamma_a, gamma_c")->required();
    sweep_cmd->add_option("--range", sweep.range, "start:stop:count (inclusive, linear)")->required();
    add_overrides(sweep_cmd, sweep.overrides, sweep_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    if (*run_cmd) {
        if (run_out) {
            run.overrides.out = *run_out;
        }
        return cmd_run(run, std::cout, std::cerr);
    }
    if (*validate_cmd) {
        return cmd_validate(validate_config, std::cout, std::cerr);
    }
    if (*compose_cmd) {
        return cmd_compose(compose, std::cout, std::cerr);
    }
    if (sweep_out) {
        sweep.overrides.out = *sweep_out;
    }
    return cmd_sweep(sweep, std::cout, std::cerr);
}
