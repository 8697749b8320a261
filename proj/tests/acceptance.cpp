// One line per acceptance criterion. Exit status is 0 when the failing set
// equals the --expect-fail set exactly, so a known failure stays visible
// without breaking ctest and an unexpected pass is flagged too.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "pendusim/cli.hpp"
#include "pendusim/control.hpp"
#include "pendusim/sim.hpp"

using namespace pendusim;

namespace {

// Tolerances.
constexpr double kSymTol = 1e-10;
constexpr double kGravTol = 1e-6;
constexpr double kSkewTol = 1e-5;
constexpr double kOracleBudget = 30.0; // s
constexpr double kDriftTol = 1e-6;
constexpr double kOrderLo = 8.0, kOrderHi = 32.0;
constexpr double kPflTol = 1e-7;
constexpr double kPflAgree = 1e-6;
constexpr double kLimitCycleP2p = 0.02; // m
constexpr double kRunBudget = 10.0;     // s
constexpr double kDecayDrop = 5.0;
constexpr double kResidualTol = 1e-10;
constexpr double kGridTol = 1e-3;

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const SignalReport &sig(const OutcomeReport &r, const char *name) { return r.signals.at(name); }

bool is(const OutcomeReport &r, const char *name, Classification c) {
    return sig(r, name).classification == c;
}

std::string cls(const OutcomeReport &r, const char *name) {
    return to_string(sig(r, name).classification);
}

Verdict oracle_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    const SystemModel m = preset_paper(3);
    oracle::Sampler smp(1);
    double sym = 0.0, grav = 0.0, skew = 0.0, lowest = INFINITY;
    for (int k = 0; k < 1000; ++k) {
        const VectorXd q = smp.q(m), qd = smp.qd(m);
        const MatrixXd M = mass_matrix(m, q);
        sym = std::max(sym, (M - M.transpose()).norm() / M.norm());
        lowest = std::min(lowest, Eigen::SelfAdjointEigenSolver<MatrixXd>(M).eigenvalues()[0]);
        const VectorXd dv =
            oracle::gradient([&](const VectorXd &x) { return oracle::potential_energy(m, x); }, q);
        grav = std::max(grav, (gravity_vector(m, q) - dv).norm() / (1.0 + dv.norm()));
        const double h = 1e-6;
        const MatrixXd mdot = (mass_matrix(m, q + h * qd) - mass_matrix(m, q - h * qd)) / (2 * h);
        const MatrixXd d = mdot - 2.0 * coriolis_matrix(m, q, qd);
        skew = std::max(skew, 0.5 * (d + d.transpose()).norm() / (1.0 + qd.squaredNorm()));
    }
    const double wall = seconds_since(t0);
    return {sym < kSymTol && lowest > 0.0 && grav < kGravTol && skew < kSkewTol &&
                wall < kOracleBudget,
            fmt("1000 states, asym %.1e, min eig %.3g, |g - dV/dq| %.1e, sym(Mdot-2C) %.1e, %.1f s",
                sym, lowest, grav, skew, wall)};
}

State free_swing(const SystemModel &m, double dt, double t1, double *drift) {
    State s = State::zero(m);
    s.q[dof::roll] = 0.1;
    const Controller free{ControllerKind::free, Gains::defaults(m.link_count()), {}, {}};
    const double e0 = kinetic_energy(m, s.q, s.qd) + potential_energy(m, s.q);
    double worst = 0.0, peak = 0.0;
    const long steps = std::lround(t1 / dt);
    for (long k = 0; k < steps; ++k) {
        s = step(m, s, free, dt);
        if (drift) {
            const double ke = kinetic_energy(m, s.q, s.qd);
            peak = std::max(peak, ke);
            worst = std::max(worst, std::abs(ke + potential_energy(m, s.q) - e0));
        }
    }
    if (drift)
        *drift = worst / peak;
    return s;
}

Verdict conservation() {
    const SystemModel m = preset_paper(3);
    double drift = 0.0;
    free_swing(m, 1e-3, 10.0, &drift);
    // dt 1e-3 sits at the roundoff floor; the order check uses coarse steps
    const State ref = free_swing(m, 2.5e-3, 10.0, nullptr);
    double err[3];
    const double dts[3] = {0.08, 0.04, 0.02};
    for (int i = 0; i < 3; ++i) {
        const State s = free_swing(m, dts[i], 10.0, nullptr);
        err[i] = std::max((s.q - ref.q).cwiseAbs().maxCoeff(), (s.qd - ref.qd).cwiseAbs().maxCoeff());
    }
    const double r1 = err[0] / err[1], r2 = err[1] / err[2];
    auto in = [](double r) { return r >= kOrderLo && r <= kOrderHi; };
    return {drift < kDriftTol && in(r1) && in(r2),
            fmt("drift %.2e over 10 s, order ratios %.2f %.2f", drift, r1, r2)};
}

Verdict pfl() {
    const SystemModel m = preset_paper(3);
    oracle::Sampler smp(3);
    double e_std = 0.0, e_tr = 0.0, agree = 0.0;
    for (int k = 0; k < 100; ++k) {
        const VectorXd q = smp.q(m), qd = smp.qd(m);
        const VectorXd y = smp.vec(m.input_count(), 2.0);
        const DynamicsTerms t = evaluate(m, q, qd);
        const ControlInput u1 = pfl_input_standard(t, y);
        const ControlInput u2 = pfl_input_transformed(t, transform(m, t), y);
        const MatrixXd B = actuation_map(m.dof());
        e_std = std::max(e_std, (B.transpose() * forward_dynamics(t, u1.generalized()) - y).norm());
        e_tr = std::max(e_tr, (B.transpose() * forward_dynamics(t, u2.generalized()) - y).norm());
        agree = std::max(agree, (u1.stacked() - u2.stacked()).norm());
    }
    return {e_std < kPflTol && e_tr < kPflTol && agree < kPflAgree,
            fmt("100 states, standard %.1e, transformed %.1e, |u1 - u2| %.1e", e_std, e_tr, agree)};
}

Verdict motivating(const RunResult &r) {
    const OutcomeReport &o = r.report;
    const double p2p = sig(o, "q_m").trailing_amplitude;
    return {is(o, "phi", Classification::converged) && is(o, "q_m", Classification::limit_cycle) &&
                p2p > kLimitCycleP2p && o.wall_time < kRunBudget,
            fmt("phi %s (settled %.2f s), q_m %s p2p %.4f m, %.2f s wall", cls(o, "phi").c_str(),
                sig(o, "phi").settling_time, cls(o, "q_m").c_str(), p2p, o.wall_time)};
}

Verdict remark1(const RunResult &r) {
    const OutcomeReport &o = r.report;
    return {is(o, "xc", Classification::converged) &&
                (is(o, "phi", Classification::diverged) || is(o, "q_m", Classification::diverged)),
            fmt("xc %s, phi %s, q_m %s (max %.3g m)", cls(o, "xc").c_str(), cls(o, "phi").c_str(),
                cls(o, "q_m").c_str(), sig(o, "q_m").max_abs)};
}

Verdict remark2(const RunResult &r) {
    const OutcomeReport &o = r.report;
    auto oscillating = [&](const char *s) {
        return is(o, s, Classification::limit_cycle) || is(o, s, Classification::inconclusive);
    };
    return {oscillating("phi") && oscillating("q_m"),
            fmt("phi %s (p2p %.2e rad), q_m %s (p2p %.2e m)", cls(o, "phi").c_str(),
                sig(o, "phi").trailing_amplitude, cls(o, "q_m").c_str(),
                sig(o, "q_m").trailing_amplitude)};
}

bool all_converged(const OutcomeReport &o) {
    return is(o, "xc", Classification::converged) && is(o, "q_m", Classification::converged) &&
           is(o, "phi", Classification::converged);
}

Verdict proposed(const RunResult &r) {
    const OutcomeReport &o = r.report;
    return {all_converged(o) && o.decay_rate > 0.0,
            fmt("xc %s %.2f s, q_m %s %.2f s, phi %s %.2f s, decay %.4f 1/s", cls(o, "xc").c_str(),
                sig(o, "xc").settling_time, cls(o, "q_m").c_str(), sig(o, "q_m").settling_time,
                cls(o, "phi").c_str(), sig(o, "phi").settling_time, o.decay_rate)};
}

Verdict gain_ordering(const RunResult &base) {
    Scenario sc = make_preset("fig6_proposed");
    sc.name = "reversed_ordering";
    sc.controller.gains.D_c.setConstant(2.0);
    sc.controller.gains.K_c.setConstant(2.0);
    sc.controller.gains.D_m.setConstant(20.0);
    sc.controller.gains.K_m.setConstant(20.0);
    const OutcomeReport o = run(sc).report;
    const bool lost = !all_converged(o);
    const bool slower = !(o.decay_rate > base.report.decay_rate / kDecayDrop);
    return {lost || slower,
            fmt("reversed gains: xc %s, q_m %s, phi %s, decay %.4f vs %.4f 1/s",
                cls(o, "xc").c_str(), cls(o, "q_m").c_str(), cls(o, "phi").c_str(), o.decay_rate,
                base.report.decay_rate)};
}

Verdict equilibrium() {
    bool ok = true;
    std::string detail;
    for (int n : {3, 7}) {
        const SystemModel m = preset_paper(n);
        VectorXd qr = VectorXd::Zero(n);
        qr.head(2) << M_PI / 4.0, M_PI / 2.0;
        const auto res = solve_equilibrium_qm(m, qr);
        const double r = level_attitude_gravity(m, res.q_m, qr).norm();
        auto f = [&](const Vec2 &x) { return oracle::level_torque(m, x, qr).norm(); };
        const auto coarse = oracle::grid_argmin(f, Vec2::Zero(), 0.8, 161);
        const auto fine = oracle::grid_argmin(f, coarse.argmin, coarse.spacing, 161);
        const double gap = (fine.argmin - res.q_m).norm();
        const bool pass = r < kResidualTol &&
                          (coarse.argmin - res.q_m).cwiseAbs().maxCoeff() <= coarse.spacing &&
                          gap < kGridTol;
        ok = ok && pass;
        detail += fmt("%sn=%d q_m* (%.4f, %.4f) residual %.1e grid gap %.1e", n == 3 ? "" : "; ", n,
                      res.q_m[0], res.q_m[1], r, gap);
    }
    return {ok, detail};
}

Verdict cascade(const RunResult &fig3, const RunResult &fig6) {
    bool ok = true;
    std::string detail;
    for (const RunResult *r : {&fig3, &fig6}) {
        const OutcomeReport &o = r->report;
        const double phi = sig(o, "phi").settling_time;
        const double outer = std::max(sig(o, "gamma").settling_time, sig(o, "q_r").settling_time);
        ok = ok && std::isfinite(phi) && std::isfinite(outer) && outer <= phi;
        detail += fmt("%s%s outer %.2f s, phi %.2f s", r == &fig3 ? "" : "; ", o.scenario.c_str(),
                      outer, phi);
    }
    return {ok, detail};
}

} // namespace

int main(int argc, char **argv) {
    std::set<int> expected;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--expect-fail" && i + 1 < argc)
            expected.insert(std::atoi(argv[++i]));
        else {
            std::fprintf(stderr, "usage: %s [--expect-fail N]...\n", argv[0]);
            return 2;
        }
    }

    std::set<int> failed;
    auto report = [&](int id, const Verdict &v) {
        std::printf("criterion %d: %s  %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
        if (!v.pass)
            failed.insert(id);
    };
    auto guarded = [&](int id, auto &&f) {
        try {
            report(id, f());
        } catch (const std::exception &e) {
            report(id, {false, std::string("error: ") + e.what()});
        }
    };

    guarded(1, oracle_suite);
    guarded(2, conservation);
    guarded(3, pfl);
    const RunResult fig3 = run(make_preset("fig3_motivating"));
    guarded(4, [&] { return motivating(fig3); });
    guarded(5, [&] { return remark1(run(make_preset("fig4_remark1"))); });
    guarded(6, [&] { return remark2(run(make_preset("fig5_remark2"))); });
    const RunResult fig6 = run(make_preset("fig6_proposed"));
    guarded(7, [&] { return proposed(fig6); });
    guarded(8, [&] { return gain_ordering(fig6); });
    guarded(9, equilibrium);
    guarded(10, [&] { return cascade(fig3, fig6); });

    for (int id : expected)
        if (!failed.count(id))
            std::printf("note: criterion %d was expected to fail but passed\n", id);
    for (int id : failed)
        if (!expected.count(id))
            std::printf("note: criterion %d failed unexpectedly\n", id);
    std::printf("%zu of 10 criteria pass\n", 10 - failed.size());
    return failed == expected ? 0 : 1;
}
