#include <algorithm>
#include <cmath>
#include <numbers>

#include "pendusim/cli.hpp"
#include "pendusim/errors.hpp"

namespace pendusim {

namespace {

using C = Classification;

bool is(const OutcomeReport &r, const std::string &signal, C c) {
    const auto it = r.signals.find(signal);
    return it != r.signals.end() && it->second.classification == c;
}

double settled_at(const OutcomeReport &r, const std::string &signal) {
    const auto it = r.signals.find(signal);
    return it == r.signals.end() ? NAN : it->second.settling_time;
}

Expectation classified(const std::string &signal, C c) {
    return {signal + " " + to_string(c), [=](const OutcomeReport &r) { return is(r, signal, c); }};
}

/// gamma and q_r inside their bands no later than phi.
Expectation outer_before_attitude() {
    return {"gamma and q_r settle no later than phi", [](const OutcomeReport &r) {
                const double phi = settled_at(r, "phi");
                const double outer = std::max(settled_at(r, "gamma"), settled_at(r, "q_r"));
                return std::isfinite(phi) && std::isfinite(outer) && outer <= phi;
            }};
}

} // namespace

const std::vector<std::string> &preset_names() {
    static const std::vector<std::string> names = {"fig3_motivating", "fig4_remark1",
                                                   "fig5_remark2", "fig6_proposed"};
    return names;
}

bool is_preset(const std::string &name) {
    const auto &n = preset_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

Scenario make_preset(const std::string &name) {
    if (!is_preset(name))
        throw UnsupportedPreset("unknown preset '" + name + "'");
    Scenario sc;
    sc.name = name;
    sc.model_preset = "paper_n3";
    sc.model = preset_paper(3);
    sc.initial = State::zero(sc.model);

    const int n = sc.model.link_count();
    Controller &c = sc.controller;
    c.gains = Gains::defaults(n);
    c.setpoint.q_r_des = VectorXd::Zero(n);
    c.setpoint.q_r_des.head(2) << std::numbers::pi / 4.0, std::numbers::pi / 2.0;
    c.setpoint.q_m_star = solve_equilibrium_qm(sc.model, c.setpoint.q_r_des).q_m;

    if (name == "fig3_motivating") {
        c.kind = ControllerKind::motivating;
    } else if (name == "fig4_remark1") {
        c.kind = ControllerKind::remark1;
        // no D factor in this law; match the proposed preset's D * D_c
        c.gains.D_c.setConstant(2000.0);
        c.gains.K_c.setConstant(2000.0);
    } else if (name == "fig5_remark2") {
        c.kind = ControllerKind::remark2;
        c.gains.D_m.setConstant(2.0);
        c.gains.K_m.setConstant(2.0);
        c.gains.D_phi.setConstant(9.0);
        c.gains.K_phi.setConstant(20.0);
    } else {
        c.kind = ControllerKind::proposed;
    }
    sc.validate();
    return sc;
}

std::vector<Expectation> expected_outcome(const std::string &preset) {
    if (preset == "fig3_motivating")
        return {classified("phi", C::converged), classified("q_m", C::limit_cycle),
                {"q_m trailing peak-to-peak > 0.02 m",
                 [](const OutcomeReport &r) {
                     const auto it = r.signals.find("q_m");
                     return it != r.signals.end() && it->second.trailing_amplitude > 0.02;
                 }},
                outer_before_attitude()};
    if (preset == "fig4_remark1")
        return {classified("xc", C::converged),
                {"phi or q_m diverged", [](const OutcomeReport &r) {
                     return is(r, "phi", C::diverged) || is(r, "q_m", C::diverged);
                 }}};
    if (preset == "fig5_remark2") {
        auto oscillating = [](const std::string &s) {
            return Expectation{s + " limit_cycle or inconclusive", [=](const OutcomeReport &r) {
                                   return is(r, s, C::limit_cycle) || is(r, s, C::inconclusive);
                               }};
        };
        return {oscillating("phi"), oscillating("q_m")};
    }
    if (preset == "fig6_proposed")
        return {classified("xc", C::converged),
                classified("q_m", C::converged),
                classified("phi", C::converged),
                classified("gamma", C::converged),
                classified("q_r", C::converged),
                {"decay rate positive",
                 [](const OutcomeReport &r) { return std::isfinite(r.decay_rate) && r.decay_rate > 0.0; }},
                outer_before_attitude()};
    return {};
}

std::vector<std::string> outcome_mismatches(const std::string &preset,
                                            const OutcomeReport &report) {
    std::vector<std::string> out;
    for (const auto &e : expected_outcome(preset))
        if (!e.holds(report))
            out.push_back(e.description);
    return out;
}

} // namespace pendusim
