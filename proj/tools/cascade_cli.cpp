// Batch front-end: cascade <verb> [--config PATH] [--out DIR] [options]

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cascade/cli/commands.hpp"

int main(int argc, char** argv)
{
    using namespace cascade;
    cli::CommonOptions opts;
    std::string config_path;
    std::uint64_t seed = 0;

    CLI::App app{"Cascaded optomechanical sensing: simulation and metrology bounds"};
    app.set_version_flag("--version", std::string(CASCADE_VERSION));
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default();
    app.add_option("--config", config_path, "Run configuration (JSON)");
    app.add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
    app.add_option("--method", opts.method,
                   "direct, first-order, strob-weak, strob-strong, cw-finite, cw-continuous or auto");
    app.add_option("--seed", seed, "Reserved; all commands are deterministic");
    app.add_option("--threads", opts.threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);

    bool per_cavity = false;
    auto* simulate = app.add_subcommand("simulate", "Solve the cascade and write the output field");
    simulate->add_flag("--per-cavity", per_cavity, "Include every intermediate spectrum");

    std::vector<std::string> sweep_sets;
    auto* sweep = app.add_subcommand("sweep", "Tabulate ratio, SNR bound and QFI over a parameter grid");
    sweep->add_option("--set", sweep_sets, "name=v1,v2,... or name=start:stop[:step]; repeatable")->required();

    app.add_subcommand("compare", "Discrepancy of every closed form against the time-domain recursion");

    std::optional<double> temperature;
    auto* thermal = app.add_subcommand("thermal", "Thermal-noise correction and maximal temperature");
    thermal->add_option("--temperature", temperature, "Temperature in K");

    std::vector<double> etas;
    auto* nopt = app.add_subcommand("nopt", "Optimal cascade length versus attenuation");
    nopt->add_option("--eta", etas, "Attenuation values")->delimiter(',');

    std::optional<std::string> preset;
    auto* application = app.add_subcommand("app", "Signal amplitudes of an application scenario");
    application->add_option("--preset", preset, "dm, gw or lhc");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::exit_config;
    }
    if (!config_path.empty()) opts.config_path = config_path;
    if (app.count("--seed") > 0) opts.seed = seed;

    auto command = [&]() -> cli::RunManifest {
        if (*simulate) return cli::cmd_simulate(opts, per_cavity);
        if (*sweep) {
            cli::SweepSpec spec;
            for (const auto& s : sweep_sets) spec.push_back(cli::parse_sweep_assignment(s));
            return cli::cmd_sweep(opts, spec);
        }
        if (app.got_subcommand("compare")) return cli::cmd_compare(opts);
        if (*thermal) return cli::cmd_thermal(opts, temperature);
        if (*nopt) return cli::cmd_nopt(opts, etas);
        return cli::cmd_app(opts, preset);
    };
    return cli::run_guarded(command, opts.out_dir, std::cerr, &std::cout);
}
