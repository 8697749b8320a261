#include "pendusim/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pendusim/errors.hpp"
#include "pendusim/io.hpp"

namespace pendusim {

namespace {

namespace fs = std::filesystem;

std::string printf_str(const char *format, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

void apply_overrides(const RunConfig &cfg, Scenario &sc) {
    if (cfg.dt)
        sc.dt = *cfg.dt;
    if (cfg.duration)
        sc.duration = *cfg.duration;
    sc.validate();
}

Scenario resolve_scenario(const RunConfig &cfg) {
    if (!cfg.preset.empty() && !cfg.scenario_path.empty())
        throw InvalidConfig("give either --preset or --scenario, not both");
    if (cfg.preset.empty() && cfg.scenario_path.empty())
        throw InvalidConfig("run needs --preset NAME, --scenario FILE or --all-presets");
    Scenario sc = cfg.scenario_path.empty() ? make_preset(cfg.preset) : load_scenario(cfg.scenario_path);
    apply_overrides(cfg, sc);
    return sc;
}

/// Model for verify/equilibrium: figure preset, model preset id, scenario
/// file, or the desk-scale default.
SystemModel resolve_model(const RunConfig &cfg, VectorXd *q_r_des) {
    if (!cfg.preset.empty() && !cfg.scenario_path.empty())
        throw InvalidConfig("give either --preset or --scenario, not both");
    SystemModel model;
    VectorXd qr;
    if (!cfg.scenario_path.empty()) {
        std::ifstream in(cfg.scenario_path);
        if (!in)
            throw InvalidConfig("cannot open scenario file '" + cfg.scenario_path + "'");
        json doc;
        try {
            in >> doc;
        } catch (const json::exception &e) {
            throw InvalidConfig("'" + cfg.scenario_path + "' is not valid JSON: " + e.what());
        }
        model = model_from_json(doc.value("model", json{{"preset", "paper_n3"}}));
        const json sp = doc.value("setpoint", json::object());
        qr = VectorXd::Zero(model.link_count());
        if (sp.contains("q_r_des_rad")) {
            const auto v = sp["q_r_des_rad"].get<std::vector<double>>();
            if (static_cast<int>(v.size()) != model.link_count())
                throw InvalidConfig("q_r_des_rad must have one entry per link");
            qr = Eigen::Map<const VectorXd>(v.data(), model.link_count());
        }
    } else if (is_preset(cfg.preset)) {
        const Scenario sc = make_preset(cfg.preset);
        model = sc.model;
        qr = sc.controller.setpoint.q_r_des;
    } else {
        model = model_preset(cfg.preset.empty() ? "paper_n3" : cfg.preset);
        // the figure scenarios' joint target, padded with zeros
        qr = VectorXd::Zero(model.link_count());
        qr.head(2) << std::numbers::pi / 4.0, std::numbers::pi / 2.0;
    }
    if (!(cfg.arm_mass_scale > 0.0) || !std::isfinite(cfg.arm_mass_scale))
        throw InvalidConfig("arm mass scale must be positive");
    for (auto &l : model.links) {
        l.mass *= cfg.arm_mass_scale;
        l.inertia *= cfg.arm_mass_scale;
    }
    if (!cfg.q_r_des.empty()) {
        if (static_cast<int>(cfg.q_r_des.size()) != model.link_count())
            throw InvalidConfig("--qr needs " + std::to_string(model.link_count()) + " values");
        qr = Eigen::Map<const VectorXd>(cfg.q_r_des.data(), model.link_count());
    }
    model.validate();
    if (q_r_des)
        *q_r_des = qr;
    return model;
}

/// Maps library errors onto exit codes; everything else propagates.
template <typename F> int guarded(std::ostream &err, F &&body) {
    try {
        return body();
    } catch (const NoConvergence &e) {
        err << "error: " << e.what() << " (residual " << printf_str("%.3e", e.residual) << ")\n";
        return exit_code::failure;
    } catch (const InvalidConfig &e) {
        err << "error: " << e.what() << '\n';
    } catch (const UnsupportedPreset &e) {
        err << "error: " << e.what() << '\n';
    } catch (const json::exception &e) {
        err << "error: " << e.what() << '\n';
    } catch (const fs::filesystem_error &e) {
        err << "error: " << e.what() << '\n';
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return exit_code::failure;
    }
    return exit_code::config;
}

std::string settle_str(double t) { return std::isfinite(t) ? printf_str("%8.2f", t) : "       -"; }

int run_one(const Scenario &sc, const std::string &dir, bool svg, std::ostream &out) {
    fs::create_directories(dir);
    const RunResult result = run(sc);
    const OutcomeReport &r = result.report;

    const bool checked = is_preset(sc.name);
    const auto mismatches = checked ? outcome_mismatches(sc.name, r) : std::vector<std::string>{};

    write_csv((fs::path(dir) / "trajectory.csv").string(), result.trajectory);
    json report = to_json(r);
    report["expected_outcome"] = {{"checked", checked}, {"mismatches", mismatches}};
    std::ofstream((fs::path(dir) / "report.json").string()) << report.dump(2) << '\n';
    save_scenario(sc, (fs::path(dir) / "scenario.json").string());
    if (svg)
        write_svg_plots(dir, sc, result.trajectory);

    out << sc.name << " [" << r.controller << "] "
        << printf_str("%.2f s simulated in %.2f s wall", r.end_time, r.wall_time) << '\n';
    out << "  signal  verdict       settle[s]  trailing p2p     max|err|\n";
    for (const char *name : {"phi", "xc", "q_m", "gamma", "q_r"}) {
        const auto it = r.signals.find(name);
        if (it == r.signals.end())
            continue;
        const SignalReport &s = it->second;
        out << printf_str("  %-6s  %-12s  ", name, to_string(s.classification).c_str())
            << settle_str(s.settling_time)
            << printf_str("  %12.3e %12.3e\n", s.trailing_amplitude, s.max_abs);
    }
    out << printf_str("  decay rate %.4g 1/s, energy audit %.2e\n", r.decay_rate, r.energy_audit);
    if (r.escaped)
        out << "  escaped: " << r.escape_reason << '\n';
    for (const auto &w : r.warnings)
        out << "  warning: " << w << '\n';
    if (!checked) {
        out << "  (no expected outcome for a custom scenario)\n";
        return exit_code::ok;
    }
    if (mismatches.empty()) {
        out << "  expected outcome: reproduced\n";
        return exit_code::ok;
    }
    for (const auto &m : mismatches)
        out << "  expected outcome NOT met: " << m << '\n';
    return exit_code::mismatch;
}

} // namespace

int cmd_run(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
    if (!cfg.all_presets)
        return guarded(err, [&] {
            const Scenario sc = resolve_scenario(cfg);
            return run_one(sc, cfg.out_dir, cfg.emit_svg, out);
        });

    if (!cfg.preset.empty() || !cfg.scenario_path.empty()) {
        err << "error: --all-presets excludes --preset and --scenario\n";
        return exit_code::config;
    }
    struct Job {
        std::ostringstream out, err;
        std::future<int> code;
    };
    std::vector<std::unique_ptr<Job>> jobs;
    for (const auto &name : preset_names()) {
        auto job = std::make_unique<Job>();
        Job *j = job.get();
        j->code = std::async(std::launch::async, [&cfg, name, j] {
            return guarded(j->err, [&] {
                Scenario sc = make_preset(name);
                apply_overrides(cfg, sc);
                return run_one(sc, (fs::path(cfg.out_dir) / name).string(), cfg.emit_svg, j->out);
            });
        });
        jobs.push_back(std::move(job));
    }
    int worst = exit_code::ok;
    auto rank = [](int c) { return c == exit_code::config ? 3 : c == exit_code::failure ? 2 : c == exit_code::mismatch ? 1 : 0; };
    for (auto &j : jobs) {
        const int c = j->code.get();
        out << j->out.str();
        err << j->err.str();
        if (rank(c) > rank(worst))
            worst = c;
    }
    return worst;
}

int cmd_verify(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        const SystemModel model = resolve_model(cfg, nullptr);
        const auto results = verify_suite(model, cfg.seed, cfg.samples);
        out << printf_str("property suite: %d DoF, seed %llu, %d states\n", model.dof(),
                          static_cast<unsigned long long>(cfg.seed), cfg.samples);
        out << "  property                verdict   worst        tolerance  samples\n";
        bool all = true;
        for (const auto &p : results) {
            out << printf_str("  %-22s  %-8s  %-11.3e  %-9.1e  %d\n", p.name.c_str(),
                              p.passed ? "pass" : "FAIL", p.worst, p.tolerance, p.samples);
            if (!p.detail.empty())
                out << "      " << p.detail << '\n';
            all = all && p.passed;
        }
        if (!all) {
            for (const auto &p : results)
                if (!p.passed)
                    err << "failed property: " << p.name << '\n';
            return exit_code::failure;
        }
        return exit_code::ok;
    });
}

int cmd_equilibrium(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        VectorXd qr;
        const SystemModel model = resolve_model(cfg, &qr);
        out << "q_r_des =";
        for (Eigen::Index i = 0; i < qr.size(); ++i)
            out << printf_str(" %.6g", qr[i]);
        out << " rad\n";
        EquilibriumResult res;
        try {
            res = solve_equilibrium_qm(model, qr);
        } catch (const NoConvergence &e) {
            out << printf_str("no balancing mover position within +-%.3g m; residual |g_phi| = "
                              "%.3e N m\n",
                              model.movers.travel_limit, e.residual);
            throw;
        }
        out << printf_str("q_m* = (%.12g, %.12g) m\n", res.q_m[0], res.q_m[1])
            << printf_str("residual |g_phi| = %.3e N m after %d iterations\n", res.residual,
                          res.iterations);
        if (cfg.write_back) {
            if (cfg.scenario_path.empty())
                throw InvalidConfig("--write needs --scenario FILE");
            std::ifstream in(cfg.scenario_path);
            json doc = json::parse(in);
            doc["setpoint"]["q_m_star_m"] = {res.q_m[0], res.q_m[1]};
            doc["setpoint"]["q_r_des_rad"] = std::vector<double>(qr.data(), qr.data() + qr.size());
            std::ofstream(cfg.scenario_path) << doc.dump(2) << '\n';
            out << "wrote q_m_star_m into " << cfg.scenario_path << '\n';
        }
        return exit_code::ok;
    });
}

} // namespace pendusim
