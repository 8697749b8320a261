#include "pendusim/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pendusim/errors.hpp"

namespace pendusim {

namespace {

json vec_json(const Eigen::Ref<const VectorXd> &v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v[i]);
    return a;
}

json mat3_json(const Mat3 &m) {
    json a = json::array();
    for (int r = 0; r < 3; ++r)
        a.push_back(vec_json(m.row(r).transpose()));
    return a;
}

VectorXd json_vec(const json &j, const std::string &what, Eigen::Index size = -1) {
    if (!j.is_array())
        throw InvalidConfig(what + " must be an array");
    if (size >= 0 && static_cast<Eigen::Index>(j.size()) != size)
        throw InvalidConfig(what + " must have " + std::to_string(size) + " entries");
    VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw InvalidConfig(what + " entries must be numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Vec3 json_vec3(const json &j, const std::string &what) { return json_vec(j, what, 3); }
Vec2 json_vec2(const json &j, const std::string &what) { return json_vec(j, what, 2); }

Mat3 json_mat3(const json &j, const std::string &what) {
    if (!j.is_array() || j.size() != 3)
        throw InvalidConfig(what + " must be a 3x3 nested array");
    Mat3 m;
    for (int r = 0; r < 3; ++r)
        m.row(r) = json_vec3(j[r], what).transpose();
    return m;
}

double json_num(const json &j, const std::string &key, double fallback) {
    if (!j.contains(key))
        return fallback;
    if (!j[key].is_number())
        throw InvalidConfig("'" + key + "' must be a number");
    return j[key].get<double>();
}

json num_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

} // namespace

json to_json(const SystemModel &m) {
    json links = json::array();
    for (const auto &l : m.links)
        links.push_back({{"parent_offset_m", vec_json(l.parent_offset)},
                         {"axis", vec_json(l.axis)},
                         {"mass_kg", l.mass},
                         {"com_offset_m", vec_json(l.com_offset)},
                         {"inertia_kgm2", mat3_json(l.inertia)}});
    return {{"platform",
             {{"mass_kg", m.platform.mass},
              {"inertia_kgm2", mat3_json(m.platform.inertia)},
              {"wire_length_m", m.platform.wire_length},
              {"rail_height_m", m.platform.rail_height},
              {"mount_offset_m", vec_json(m.platform.mount_offset)}}},
            {"movers", {{"mass_kg", m.movers.mass}, {"travel_limit_m", m.movers.travel_limit}}},
            {"links", links},
            {"gravity_mps2", m.gravity}};
}

SystemModel model_preset(const std::string &id) {
    if (id == "paper_n3")
        return preset_paper(3);
    if (id == "paper_n7")
        return preset_paper(7);
    throw UnsupportedPreset("unknown model preset '" + id + "'");
}

SystemModel model_from_json(const json &doc_in) {
    if (!doc_in.is_object())
        throw InvalidConfig("model must be a JSON object");
    json doc = doc_in;
    if (doc.contains("preset")) {
        if (!doc["preset"].is_string())
            throw InvalidConfig("model preset must be a string");
        json base = to_json(model_preset(doc["preset"].get<std::string>()));
        doc.erase("preset");
        base.merge_patch(doc);
        doc = std::move(base);
    }
    try {
        SystemModel m;
        const json &p = doc.at("platform");
        m.platform.mass = p.at("mass_kg").get<double>();
        m.platform.inertia = json_mat3(p.at("inertia_kgm2"), "platform inertia");
        m.platform.wire_length = p.at("wire_length_m").get<double>();
        m.platform.rail_height = p.at("rail_height_m").get<double>();
        m.platform.mount_offset = json_vec3(p.at("mount_offset_m"), "mount offset");
        const json &mv = doc.at("movers");
        m.movers.mass = mv.at("mass_kg").get<double>();
        m.movers.travel_limit = mv.at("travel_limit_m").get<double>();
        for (const json &l : doc.at("links")) {
            SerialLink link;
            link.parent_offset = json_vec3(l.at("parent_offset_m"), "link parent offset");
            link.axis = json_vec3(l.at("axis"), "link axis");
            link.mass = l.at("mass_kg").get<double>();
            link.com_offset = json_vec3(l.at("com_offset_m"), "link com offset");
            link.inertia = json_mat3(l.at("inertia_kgm2"), "link inertia");
            m.links.push_back(link);
        }
        m.gravity = doc.value("gravity_mps2", 9.81);
        m.validate();
        return m;
    } catch (const json::exception &e) {
        throw InvalidConfig(std::string("malformed model: ") + e.what());
    }
}

json to_json(const Gains &g) {
    return {{"D_gamma", g.D_gamma}, {"K_gamma", g.K_gamma}, {"D_r", vec_json(g.D_r)},
            {"K_r", vec_json(g.K_r)}, {"D", vec_json(g.D)},        {"D_c", vec_json(g.D_c)},
            {"K_c", vec_json(g.K_c)}, {"D_m", vec_json(g.D_m)},    {"K_m", vec_json(g.K_m)},
            {"D_phi", vec_json(g.D_phi)}, {"K_phi", vec_json(g.K_phi)}};
}

Gains gains_from_json(const json &doc, int n) {
    if (!doc.is_object())
        throw InvalidConfig("gains must be a JSON object");
    Gains g = Gains::defaults(n);
    g.D_gamma = json_num(doc, "D_gamma", g.D_gamma);
    g.K_gamma = json_num(doc, "K_gamma", g.K_gamma);
    // Diagonal gains accept a scalar (same on every axis) or the full diagonal.
    auto diag = [&](const char *key, VectorXd &v, Eigen::Index size) {
        if (!doc.contains(key))
            return;
        const json &j = doc[key];
        v = j.is_number() ? VectorXd::Constant(size, j.get<double>())
                          : json_vec(j, key, size);
    };
    diag("D_r", g.D_r, n);
    diag("K_r", g.K_r, n);
    auto diag2 = [&](const char *key, Vec2 &v) {
        VectorXd tmp = v;
        diag(key, tmp, 2);
        v = tmp;
    };
    diag2("D", g.D);
    diag2("D_c", g.D_c);
    diag2("K_c", g.K_c);
    diag2("D_m", g.D_m);
    diag2("K_m", g.K_m);
    diag2("D_phi", g.D_phi);
    diag2("K_phi", g.K_phi);
    g.validate(n);
    return g;
}

json to_json(const Setpoint &sp) {
    return {{"gamma_des_rad", sp.gamma_des},
            {"q_r_des_rad", vec_json(sp.q_r_des)},
            {"q_m_star_m", vec_json(sp.q_m_star)}};
}

json to_json(const Scenario &sc) {
    json model = to_json(sc.model);
    model["preset"] = sc.model_preset;
    json doc = {{"name", sc.name},
                {"model", model},
                {"controller", to_string(sc.controller.kind)},
                {"gains", to_json(sc.controller.gains)},
                {"setpoint", to_json(sc.controller.setpoint)},
                {"initial_state", {{"q", vec_json(sc.initial.q)}, {"qd", vec_json(sc.initial.qd)}}},
                {"dt_s", sc.dt},
                {"duration_s", sc.duration},
                {"decimation", sc.decimation},
                {"control_period_s", sc.control_period},
                {"bands",
                 {{"attitude_rad", sc.band_attitude},
                  {"movers_m", sc.band_movers},
                  {"com_m", sc.band_com},
                  {"outer", sc.band_outer}}},
                {"window_s", sc.window},
                {"fit_window_s", sc.fit_window}};
    if (sc.controller.disturbance.size() > 0)
        doc["disturbance"] = vec_json(sc.controller.disturbance);
    return doc;
}

Scenario scenario_from_json(const json &doc) {
    if (!doc.is_object())
        throw InvalidConfig("scenario must be a JSON object");
    try {
        Scenario sc;
        sc.name = doc.value("name", std::string("custom"));
        const json model = doc.value("model", json{{"preset", "paper_n3"}});
        sc.model_preset = model.value("preset", std::string("custom"));
        sc.model = model_from_json(model);
        const int n = sc.model.link_count();

        sc.controller.kind = controller_from_string(doc.value("controller", std::string("proposed")));
        sc.controller.gains =
            gains_from_json(doc.value("gains", json::object()), n);
        const json sp = doc.value("setpoint", json::object());
        sc.controller.setpoint.gamma_des = json_num(sp, "gamma_des_rad", 0.0);
        sc.controller.setpoint.q_r_des = sp.contains("q_r_des_rad")
                                             ? json_vec(sp["q_r_des_rad"], "q_r_des_rad", n)
                                             : VectorXd::Zero(n);
        if (sp.contains("q_m_star_m")) {
            sc.controller.setpoint.q_m_star = json_vec2(sp["q_m_star_m"], "q_m_star_m");
            const double r = level_attitude_gravity(sc.model, sc.controller.setpoint.q_m_star,
                                                    sc.controller.setpoint.q_r_des)
                                 .norm();
            if (!(r < 1e-10))
                throw InvalidConfig("q_m_star does not balance the arm (residual " +
                                    std::to_string(r) + ")");
        } else {
            sc.controller.setpoint.q_m_star =
                solve_equilibrium_qm(sc.model, sc.controller.setpoint.q_r_des).q_m;
        }

        sc.initial = State::zero(sc.model);
        if (doc.contains("initial_state")) {
            const json &s = doc["initial_state"];
            if (s.contains("q"))
                sc.initial.q = json_vec(s["q"], "initial q", sc.model.dof());
            if (s.contains("qd"))
                sc.initial.qd = json_vec(s["qd"], "initial qd", sc.model.dof());
        }
        if (doc.contains("disturbance"))
            sc.controller.disturbance = json_vec(doc["disturbance"], "disturbance", sc.model.dof());

        sc.dt = json_num(doc, "dt_s", sc.dt);
        sc.duration = json_num(doc, "duration_s", sc.duration);
        if (doc.contains("decimation")) {
            if (!doc["decimation"].is_number_integer())
                throw InvalidConfig("decimation must be an integer");
            sc.decimation = doc["decimation"].get<int>();
        }
        sc.control_period = json_num(doc, "control_period_s", sc.control_period);
        const json bands = doc.value("bands", json::object());
        sc.band_attitude = json_num(bands, "attitude_rad", sc.band_attitude);
        sc.band_movers = json_num(bands, "movers_m", sc.band_movers);
        sc.band_com = json_num(bands, "com_m", sc.band_com);
        sc.band_outer = json_num(bands, "outer", sc.band_outer);
        sc.window = json_num(doc, "window_s", sc.window);
        sc.fit_window = json_num(doc, "fit_window_s", sc.fit_window);
        sc.validate();
        return sc;
    } catch (const json::exception &e) {
        throw InvalidConfig(std::string("malformed scenario: ") + e.what());
    }
}

Scenario load_scenario(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidConfig("cannot open scenario file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception &e) {
        throw InvalidConfig("'" + path + "' is not valid JSON: " + e.what());
    }
    return scenario_from_json(doc);
}

void save_scenario(const Scenario &sc, const std::string &path) {
    std::ofstream out(path);
    if (!out)
        throw InvalidConfig("cannot write '" + path + "'");
    out << to_json(sc).dump(2) << '\n';
}

json to_json(const OutcomeReport &r) {
    json signals = json::object();
    for (const auto &[name, s] : r.signals)
        signals[name] = {{"classification", to_string(s.classification)},
                         {"settling_time_s", num_or_null(s.settling_time)},
                         {"trailing_amplitude", s.trailing_amplitude},
                         {"max_abs", s.max_abs},
                         {"band", s.band},
                         {"escape_bound", s.escape_bound}};
    return {{"scenario", r.scenario},
            {"controller", r.controller},
            {"signals", signals},
            {"decay_rate_per_s", num_or_null(r.decay_rate)},
            {"energy_drift", num_or_null(r.energy_drift)},
            {"energy_audit", num_or_null(r.energy_audit)},
            {"escaped", r.escaped},
            {"escape_reason", r.escape_reason},
            {"end_time_s", r.end_time},
            {"wall_time_s", r.wall_time},
            {"warnings", r.warnings}};
}

std::string csv_header(int n) {
    std::vector<std::string> q = {"alpha", "beta", "gamma", "qm1", "qm2"};
    for (int i = 1; i <= n; ++i)
        q.push_back("qr" + std::to_string(i));
    std::string h = "t";
    for (const auto &c : q)
        h += "," + c;
    for (const auto &c : q)
        h += ",d_" + c;
    h += ",u_yaw,u_m1,u_m2";
    for (int i = 1; i <= n; ++i)
        h += ",u_r" + std::to_string(i);
    return h + ",xc_x,xc_y,E_kin,E_pot";
}

void write_csv(std::ostream &out, const Trajectory &traj) {
    out << csv_header(traj.link_count) << '\n';
    char buf[32];
    auto put = [&](double x, bool first = false) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        if (!first)
            out << ',';
        out << buf;
    };
    for (const auto &r : traj.records) {
        put(r.t, true);
        for (const VectorXd *v : {&r.q, &r.qd, &r.u})
            for (Eigen::Index i = 0; i < v->size(); ++i)
                put((*v)[i]);
        put(r.xc[0]);
        put(r.xc[1]);
        put(r.kinetic);
        put(r.potential);
        out << '\n';
    }
}

void write_csv(const std::string &path, const Trajectory &traj) {
    std::ofstream out(path);
    if (!out)
        throw InvalidConfig("cannot write '" + path + "'");
    write_csv(out, traj);
}

Trajectory read_csv(std::istream &in) {
    std::string line;
    if (!std::getline(in, line))
        throw InvalidConfig("empty trajectory CSV");
    const auto columns = std::count(line.begin(), line.end(), ',') + 1;
    // 1 + 2 (5 + n) + (3 + n) + 4 columns
    if ((columns - 18) % 3 != 0 || columns < 18)
        throw InvalidConfig("unexpected CSV column count");
    Trajectory traj;
    traj.link_count = static_cast<int>((columns - 18) / 3);
    if (line != csv_header(traj.link_count))
        throw InvalidConfig("unexpected CSV header");
    const int dof = 5 + traj.link_count;
    const int inputs = 3 + traj.link_count;
    std::vector<double> row(static_cast<std::size_t>(columns));
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const char *p = line.c_str();
        for (std::size_t i = 0; i < row.size(); ++i) {
            char *end = nullptr;
            row[i] = std::strtod(p, &end);
            const bool last = i + 1 == row.size();
            if (end == p || (last ? (*end != '\0' && *end != '\r') : *end != ','))
                throw InvalidConfig("malformed CSV row");
            p = end + (last ? 0 : 1);
        }
        Record r;
        std::size_t k = 0;
        r.t = row[k++];
        r.q = Eigen::Map<VectorXd>(row.data() + k, dof);
        k += dof;
        r.qd = Eigen::Map<VectorXd>(row.data() + k, dof);
        k += dof;
        r.u = Eigen::Map<VectorXd>(row.data() + k, inputs);
        k += inputs;
        r.xc = Vec2(row[k], row[k + 1]);
        r.kinetic = row[k + 2];
        r.potential = row[k + 3];
        traj.records.push_back(std::move(r));
    }
    return traj;
}

Trajectory read_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidConfig("cannot open '" + path + "'");
    return read_csv(in);
}

} // namespace pendusim
