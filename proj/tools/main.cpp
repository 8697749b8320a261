#include <iostream>

#include <CLI11.hpp>

#include "pendusim/cli.hpp"

int main(int argc, char **argv) {
    using namespace pendusim;

    CLI::App app{"Suspended aerial platform simulator: closed-loop runs, property checks and "
                 "static balance."};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_source = [&](CLI::App *sub) {
        auto *p = sub->add_option("--preset", cfg.preset, "figure preset or model preset id");
        auto *s = sub->add_option("--scenario", cfg.scenario_path, "scenario JSON file");
        p->excludes(s);
    };

    auto *run = app.add_subcommand("run", "simulate a scenario and check its expected outcome");
    add_source(run);
    run->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
    run->add_flag("--svg", cfg.emit_svg, "write one SVG per signal group");
    run->add_flag("--all-presets", cfg.all_presets, "run every figure preset into OUT/<name>");
    run->add_option("--dt", cfg.dt, "integration step [s]");
    run->add_option("--duration", cfg.duration, "simulated time [s]");
    run->add_option("--seed", cfg.seed, "unused by run; accepted for symmetry");

    auto *verify = app.add_subcommand("verify", "randomized dynamics and control property suite");
    add_source(verify);
    verify->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
    verify->add_option("--samples", cfg.samples, "random states")->capture_default_str();
    verify->add_option("--arm-mass-scale", cfg.arm_mass_scale, "multiply every link mass");

    auto *eq = app.add_subcommand("equilibrium", "mover position balancing the arm");
    add_source(eq);
    eq->add_option("--qr", cfg.q_r_des, "joint target [rad], one per link");
    eq->add_option("--arm-mass-scale", cfg.arm_mass_scale, "multiply every link mass");
    eq->add_flag("--write", cfg.write_back, "store q_m* in the scenario file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code::config;
    }

    if (run->parsed())
        return cmd_run(cfg, std::cout, std::cerr);
    if (verify->parsed())
        return cmd_verify(cfg, std::cout, std::cerr);
    return cmd_equilibrium(cfg, std::cout, std::cerr);
}
