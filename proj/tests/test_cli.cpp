#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pendusim/cli.hpp"
#include "pendusim/io.hpp"

using namespace pendusim;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory, removed on scope exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string &tag) {
        path = fs::temp_directory_path() / ("pendusim_cli_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string &name) const { return (path / name).string(); }
};

std::string slurp(const std::string &path) {
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

OutcomeReport synthetic(std::map<std::string, Classification> verdicts) {
    OutcomeReport r;
    for (const auto &[name, c] : verdicts) {
        SignalReport s;
        s.classification = c;
        s.settling_time = c == Classification::converged ? 5.0 : NAN;
        r.signals[name] = s;
    }
    r.decay_rate = 0.2;
    return r;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("presets") {
    CHECK(preset_names().size() == 4);
    for (const auto &name : preset_names()) {
        const Scenario sc = make_preset(name);
        CHECK(sc.name == name);
        CHECK(sc.model.link_count() == 3);
        CHECK(!expected_outcome(name).empty());
    }
    CHECK(make_preset("fig3_motivating").controller.kind == ControllerKind::motivating);
    CHECK(make_preset("fig4_remark1").controller.kind == ControllerKind::remark1);
    CHECK(make_preset("fig5_remark2").controller.kind == ControllerKind::remark2);
    CHECK(make_preset("fig6_proposed").controller.kind == ControllerKind::proposed);
    CHECK(make_preset("fig6_proposed").controller.gains.satisfies_ordering());
    CHECK_THROWS_AS(make_preset("fig7"), UnsupportedPreset);
    CHECK(!is_preset("paper_n3"));
    CHECK(expected_outcome("custom").empty());
}

TEST_CASE("expectation logic") {
    using C = Classification;
    OutcomeReport good = synthetic({{"phi", C::converged}, {"xc", C::converged},
                                    {"q_m", C::converged}, {"gamma", C::converged},
                                    {"q_r", C::converged}});
    CHECK(outcome_mismatches("fig6_proposed", good).empty());
    good.signals["phi"].settling_time = 1.0;
    CHECK(outcome_mismatches("fig6_proposed", good).size() == 1);

    OutcomeReport r1 = synthetic({{"xc", C::converged}, {"phi", C::converged}, {"q_m", C::diverged}});
    CHECK(outcome_mismatches("fig4_remark1", r1).empty());
    r1.signals["q_m"].classification = C::converged;
    CHECK(outcome_mismatches("fig4_remark1", r1).size() == 1);

    const OutcomeReport r2 = synthetic({{"phi", C::inconclusive}, {"q_m", C::limit_cycle}});
    CHECK(outcome_mismatches("fig5_remark2", r2).empty());
    CHECK(outcome_mismatches("fig5_remark2", synthetic({{"phi", C::converged}, {"q_m", C::limit_cycle}}))
              .size() == 1);
}

TEST_CASE("run: config errors") {
    std::ostringstream out, err;
    RunConfig cfg;
    cfg.scenario_path = "/nonexistent/scenario.json";
    CHECK(cmd_run(cfg, out, err) == exit_code::config);
    CHECK(err.str().find("cannot open") != std::string::npos);

    cfg = {};
    CHECK(cmd_run(cfg, out, err) == exit_code::config);
    cfg.preset = "fig9";
    CHECK(cmd_run(cfg, out, err) == exit_code::config);
    cfg.preset = "fig6_proposed";
    cfg.dt = 0.5;
    CHECK(cmd_run(cfg, out, err) == exit_code::config);
    cfg.dt.reset();
    cfg.scenario_path = "x.json";
    CHECK(cmd_run(cfg, out, err) == exit_code::config);
    cfg.scenario_path.clear();
    cfg.all_presets = true;
    CHECK(cmd_run(cfg, out, err) == exit_code::config);
}

TEST_CASE("run: proposed preset reproduces its outcome") {
    TempDir dir("fig6");
    RunConfig cfg;
    cfg.preset = "fig6_proposed";
    cfg.out_dir = dir / "out";
    cfg.emit_svg = true;
    std::ostringstream out, err;
    CHECK(cmd_run(cfg, out, err) == exit_code::ok);
    CHECK(out.str().find("expected outcome: reproduced") != std::string::npos);
    for (const char *f : {"trajectory.csv", "report.json", "scenario.json", "q_r_gamma.svg",
                          "x_c.svg", "q_m.svg", "phi.svg"})
        CHECK(fs::exists(fs::path(cfg.out_dir) / f));
    const json report = json::parse(slurp(dir / "out/report.json"));
    CHECK(report["expected_outcome"]["checked"] == true);
    CHECK(report["expected_outcome"]["mismatches"].empty());
    CHECK(report["signals"]["xc"]["classification"] == "converged");
    // the stored scenario reruns unchanged
    CHECK(to_json(load_scenario(dir / "out/scenario.json")) == to_json(make_preset("fig6_proposed")));
    const std::string svg = slurp(dir / "out/phi.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("nan") == std::string::npos);
}

TEST_CASE("run: custom scenario file") {
    TempDir dir("custom");
    Scenario sc = make_preset("fig3_motivating");
    sc.name = "short_motivating";
    sc.duration = 1.0;
    sc.window = 0.25;
    sc.fit_window = 0.5;
    save_scenario(sc, dir / "s.json");
    RunConfig cfg;
    cfg.scenario_path = dir / "s.json";
    cfg.out_dir = dir / "out";
    std::ostringstream out, err;
    CHECK(cmd_run(cfg, out, err) == exit_code::ok);
    CHECK(out.str().find("no expected outcome") != std::string::npos);
    const Trajectory t = read_csv(dir / "out/trajectory.csv");
    CHECK(t.records.size() == 101);
    CHECK(t.records.back().t == doctest::Approx(1.0));

    cfg.duration = 0.5;
    CHECK(cmd_run(cfg, out, err) == exit_code::ok);
    CHECK(read_csv(dir / "out/trajectory.csv").records.size() == 51);
}

TEST_CASE("verify") {
    std::ostringstream out, err;
    RunConfig cfg;
    cfg.samples = 30;
    CHECK(cmd_verify(cfg, out, err) == exit_code::ok);
    CHECK(out.str().find("FAIL") == std::string::npos);
    CHECK(out.str().find("energy_conservation") != std::string::npos);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto a = verify_suite(preset_paper(3), seed, 10);
        const auto b = verify_suite(preset_paper(3), seed, 10);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].passed);
            CHECK(a[i].worst == b[i].worst);
        }
    }

    cfg.preset = "paper_n7";
    cfg.samples = 10;
    CHECK(cmd_verify(cfg, out, err) == exit_code::ok);

    TempDir dir("verify");
    std::ofstream(dir / "bad.json") << R"({"model": {"preset": "paper_n3", "movers": {"mass_kg": -3}}})";
    cfg = {};
    cfg.scenario_path = dir / "bad.json";
    CHECK(cmd_verify(cfg, out, err) == exit_code::config);
    cfg = {};
    cfg.samples = 0;
    CHECK(cmd_verify(cfg, out, err) == exit_code::config);
}

TEST_CASE("equilibrium") {
    std::ostringstream out, err;
    RunConfig cfg;
    cfg.q_r_des = {0.0, 0.0, 0.0};
    CHECK(cmd_equilibrium(cfg, out, err) == exit_code::ok);
    CHECK(out.str().find("q_m* = (0, 0)") != std::string::npos);

    out.str("");
    cfg = {};
    cfg.preset = "paper_n7";
    CHECK(cmd_equilibrium(cfg, out, err) == exit_code::ok);

    out.str("");
    cfg = {};
    cfg.arm_mass_scale = 10.0;
    CHECK(cmd_equilibrium(cfg, out, err) == exit_code::failure);
    CHECK(out.str().find("no balancing mover position") != std::string::npos);

    cfg = {};
    cfg.q_r_des = {1.0};
    CHECK(cmd_equilibrium(cfg, out, err) == exit_code::config);
    cfg = {};
    cfg.write_back = true;
    CHECK(cmd_equilibrium(cfg, out, err) == exit_code::config);

    TempDir dir("equilibrium");
    json doc = to_json(make_preset("fig6_proposed"));
    doc["setpoint"].erase("q_m_star_m");
    doc["setpoint"]["q_r_des_rad"] = {0.3, -0.4, 1.0};
    std::ofstream(dir / "s.json") << doc.dump();
    cfg = {};
    cfg.scenario_path = dir / "s.json";
    cfg.write_back = true;
    CHECK(cmd_equilibrium(cfg, out, err) == exit_code::ok);
    const json written = json::parse(slurp(dir / "s.json"));
    REQUIRE(written["setpoint"].contains("q_m_star_m"));
    // the stored point passes the loader's residual check
    const Scenario sc = load_scenario(dir / "s.json");
    CHECK(sc.controller.setpoint.q_r_des[1] == -0.4);
    CHECK(level_attitude_gravity(sc.model, sc.controller.setpoint.q_m_star, sc.controller.setpoint.q_r_des)
              .norm() < 1e-10);
}

}
