#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "pendusim/cli.hpp"
#include "pendusim/io.hpp"

using namespace pendusim;

namespace {

Scenario tiny_run_scenario() {
    Scenario sc = make_preset("fig6_proposed");
    sc.duration = 0.5;
    sc.window = 0.1;
    sc.fit_window = 0.2;
    sc.initial.qd[dof::roll] = 0.01;
    return sc;
}

} // namespace

TEST_SUITE("io") {

TEST_CASE("model documents round-trip") {
    for (int n : {3, 7}) {
        const SystemModel m = preset_paper(n);
        const json doc = to_json(m);
        const SystemModel back = model_from_json(json::parse(doc.dump()));
        CHECK(to_json(back) == doc);
        CHECK(back.total_mass() == m.total_mass());
        CHECK(back.link_count() == n);
    }
}

TEST_CASE("preset documents accept a merge patch") {
    const SystemModel m = model_from_json(json::parse(R"({"preset": "paper_n3",
        "movers": {"mass_kg": 12.5}, "gravity_mps2": 9.8})"));
    CHECK(m.movers.mass == 12.5);
    CHECK(m.gravity == 9.8);
    CHECK(m.movers.travel_limit == preset_paper(3).movers.travel_limit);
    CHECK(m.link_count() == 3);
    CHECK_THROWS_AS(model_preset("paper_n4"), UnsupportedPreset);
    CHECK_THROWS_AS(model_from_json(json::parse(R"({"preset": 3})")), InvalidConfig);
}

TEST_CASE("malformed models are rejected") {
    CHECK_THROWS_AS(model_from_json(json::parse(R"({"preset": "paper_n3",
        "platform": {"mass_kg": -1}})")),
                    InvalidConfig);
    CHECK_THROWS_AS(model_from_json(json::parse(R"({"platform": {}})")), InvalidConfig);
    CHECK_THROWS_AS(model_from_json(json::parse(R"({"preset": "paper_n3",
        "platform": {"inertia_kgm2": [1, 2, 3]}})")),
                    InvalidConfig);
    CHECK_THROWS_AS(model_from_json(json::parse("[1, 2]")), InvalidConfig);
}

TEST_CASE("gains documents") {
    const Gains d = Gains::defaults(3);
    const Gains same = gains_from_json(to_json(d), 3);
    CHECK(to_json(same) == to_json(d));
    const Gains g = gains_from_json(json::parse(R"({"D_c": 123, "K_m": [0.1, 0.2],
        "K_r": [1, 2, 3]})"), 3);
    CHECK(g.D_c == Vec2(123, 123));
    CHECK(g.K_m == Vec2(0.1, 0.2));
    CHECK(g.K_r[2] == 3.0);
    CHECK(g.D_phi == d.D_phi);
    CHECK_THROWS_AS(gains_from_json(json::parse(R"({"K_r": [1, 2]})"), 3), InvalidConfig);
    CHECK_THROWS_AS(gains_from_json(json::parse(R"({"D_c": "high"})"), 3), InvalidConfig);
}

TEST_CASE("scenario documents round-trip") {
    for (const auto &name : preset_names()) {
        const Scenario sc = make_preset(name);
        const json doc = to_json(sc);
        const Scenario back = scenario_from_json(json::parse(doc.dump()));
        CHECK(to_json(back) == doc);
        CHECK(back.controller.kind == sc.controller.kind);
        CHECK(back.controller.setpoint.q_m_star == sc.controller.setpoint.q_m_star);
    }
    const auto path = (std::filesystem::temp_directory_path() / "pendusim_io_scenario.json").string();
    Scenario sc = make_preset("fig4_remark1");
    sc.controller.disturbance = VectorXd::LinSpaced(sc.model.dof(), -1.0, 1.0);
    sc.control_period = 5e-3;
    save_scenario(sc, path);
    CHECK(to_json(load_scenario(path)) == to_json(sc));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_scenario("/nonexistent/pendusim.json"), InvalidConfig);
}

TEST_CASE("scenario defaults and the balance point") {
    const Scenario sc = scenario_from_json(json::parse(R"({
        "setpoint": {"q_r_des_rad": [0.7853981633974483, 1.5707963267948966, 0]}})"));
    CHECK(sc.controller.kind == ControllerKind::proposed);
    CHECK(sc.model.link_count() == 3);
    CHECK(level_attitude_gravity(sc.model, sc.controller.setpoint.q_m_star,
                                 sc.controller.setpoint.q_r_des)
              .norm() < 1e-10);
    CHECK(sc.controller.setpoint.q_m_star.norm() > 0.1);

    json doc = to_json(make_preset("fig6_proposed"));
    doc["setpoint"]["q_m_star_m"] = {0.1, 0.1};
    CHECK_THROWS_AS(scenario_from_json(doc), InvalidConfig);
    doc = to_json(make_preset("fig6_proposed"));
    doc["decimation"] = 2.5;
    CHECK_THROWS_AS(scenario_from_json(doc), InvalidConfig);
    doc = to_json(make_preset("fig6_proposed"));
    doc["controller"] = "lqr";
    CHECK_THROWS_AS(scenario_from_json(doc), InvalidConfig);
    doc = to_json(make_preset("fig6_proposed"));
    doc["initial_state"]["q"] = {0, 0};
    CHECK_THROWS_AS(scenario_from_json(doc), InvalidConfig);
}

TEST_CASE("CSV header") {
    CHECK(csv_header(3) ==
          "t,alpha,beta,gamma,qm1,qm2,qr1,qr2,qr3,d_alpha,d_beta,d_gamma,d_qm1,d_qm2,d_qr1,d_qr2,"
          "d_qr3,u_yaw,u_m1,u_m2,u_r1,u_r2,u_r3,xc_x,xc_y,E_kin,E_pot");
}

TEST_CASE("CSV round-trip is exact") {
    const RunResult r = run(tiny_run_scenario());
    std::stringstream buf;
    write_csv(buf, r.trajectory);
    const Trajectory back = read_csv(buf);
    CHECK(back.link_count == 3);
    CHECK(back.records.size() == r.trajectory.records.size());
    CHECK(back == r.trajectory);

    const auto path = (std::filesystem::temp_directory_path() / "pendusim_io.csv").string();
    write_csv(path, r.trajectory);
    CHECK(read_csv(path) == r.trajectory);
    std::filesystem::remove(path);
}

TEST_CASE("malformed CSV") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_csv(empty), InvalidConfig);
    std::istringstream header("t,a,b\n1,2,3\n");
    CHECK_THROWS_AS(read_csv(header), InvalidConfig);
    std::istringstream short_row(csv_header(3) + "\n1,2,3\n");
    CHECK_THROWS_AS(read_csv(short_row), InvalidConfig);
    std::string row = "0";
    for (int i = 1; i < 27; ++i)
        row += i == 5 ? ",x" : ",0";
    std::istringstream bad_number(csv_header(3) + "\n" + row + "\n");
    CHECK_THROWS_AS(read_csv(bad_number), InvalidConfig);
}

TEST_CASE("report export") {
    OutcomeReport r;
    r.scenario = "x";
    r.controller = "proposed";
    r.decay_rate = NAN;
    SignalReport s;
    s.classification = Classification::limit_cycle;
    s.settling_time = NAN;
    s.trailing_amplitude = 0.5;
    r.signals["phi"] = s;
    r.warnings = {"w"};
    const json doc = json::parse(to_json(r).dump());
    CHECK(doc["decay_rate_per_s"].is_null());
    CHECK(doc["signals"]["phi"]["classification"] == "limit_cycle");
    CHECK(doc["signals"]["phi"]["settling_time_s"].is_null());
    CHECK(doc["signals"]["phi"]["trailing_amplitude"] == 0.5);
    CHECK(doc["warnings"].size() == 1);
}

}
