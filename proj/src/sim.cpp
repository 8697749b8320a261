#include "pendusim/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "pendusim/dynamics.hpp"
#include "pendusim/errors.hpp"

namespace pendusim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kEscapeMagnitude = 1e3;

struct Stage {
    VectorXd qd;
    VectorXd qdd;
    double power{0.0};
    VectorXd u; ///< control input (without disturbance)
};

VectorXd with_disturbance(const Controller &c, VectorXd tau) {
    if (c.disturbance.size() == tau.size())
        tau += c.disturbance;
    return tau;
}

Stage eval_stage(const SystemModel &model, const Controller &ctrl, double t, const VectorXd &q,
                 const VectorXd &qd, const VectorXd *held_u) {
    Stage s;
    s.qd = qd;
    if (held_u) {
        const DynamicsTerms terms = evaluate(model, q, qd, CoriolisDetail::vector);
        VectorXd tau(model.dof());
        tau << 0.0, 0.0, *held_u;
        tau = with_disturbance(ctrl, tau);
        s.qdd = forward_dynamics(terms, tau);
        s.power = qd.dot(tau);
        s.u = *held_u;
        return s;
    }
    const State state{t, q, qd};
    ControlOutput out = compute_control(ctrl.kind, model, state, ctrl.setpoint, ctrl.gains);
    if (out.terms.M.size() == 0)
        out.terms = evaluate(model, q, qd, CoriolisDetail::vector);
    const VectorXd tau = with_disturbance(ctrl, out.u.generalized());
    s.qdd = forward_dynamics(out.terms, tau);
    s.power = qd.dot(tau);
    s.u = out.u.stacked();
    return s;
}

void check_escape(const State &s) {
    if (!s.q.allFinite() || !s.qd.allFinite())
        throw StateEscape("state is not finite at t = " + std::to_string(s.t));
    if (s.q.cwiseAbs().maxCoeff() > kEscapeMagnitude)
        throw StateEscape("|q| exceeded 1e3 at t = " + std::to_string(s.t));
    if (std::abs(s.q[dof::pitch]) >= kGimbalLimit)
        throw StateEscape("pitch reached the gimbal guard at t = " + std::to_string(s.t));
}

/// RK4 on (q, qd, work). Returns the first-stage control input via `u0`.
State rk4(const SystemModel &model, const State &s, const Controller &ctrl, double dt,
          const VectorXd *held_u, double *work, VectorXd *u0) {
    try {
        const Stage k1 = eval_stage(model, ctrl, s.t, s.q, s.qd, held_u);
        const double h2 = 0.5 * dt;
        const Stage k2 = eval_stage(model, ctrl, s.t + h2, s.q + h2 * k1.qd, s.qd + h2 * k1.qdd,
                                    held_u);
        const Stage k3 = eval_stage(model, ctrl, s.t + h2, s.q + h2 * k2.qd, s.qd + h2 * k2.qdd,
                                    held_u);
        const Stage k4 =
            eval_stage(model, ctrl, s.t + dt, s.q + dt * k3.qd, s.qd + dt * k3.qdd, held_u);
        State next;
        next.t = s.t + dt;
        next.q = s.q + (dt / 6.0) * (k1.qd + 2.0 * k2.qd + 2.0 * k3.qd + k4.qd);
        next.qd = s.qd + (dt / 6.0) * (k1.qdd + 2.0 * k2.qdd + 2.0 * k3.qdd + k4.qdd);
        if (work)
            *work += (dt / 6.0) * (k1.power + 2.0 * k2.power + 2.0 * k3.power + k4.power);
        if (u0)
            *u0 = k1.u;
        check_escape(next);
        return next;
    } catch (const StateEscape &) {
        throw;
    } catch (const GimbalLock &e) {
        throw StateEscape(std::string("gimbal lock: ") + e.what());
    }
}

Record make_record(const SystemModel &model, const State &s, const VectorXd &u) {
    Record r;
    r.t = s.t;
    r.q = s.q;
    r.qd = s.qd;
    r.u = u;
    r.xc = com_xy(model, s.q);
    r.kinetic = kinetic_energy(model, s.q, s.qd);
    r.potential = potential_energy(model, s.q);
    return r;
}

double max_abs(const std::vector<double> &x) {
    double m = 0.0;
    for (double v : x)
        m = std::max(m, std::abs(v));
    return m;
}

/// Index of the first sample with t >= t0.
std::size_t first_at(const std::vector<double> &t, double t0) {
    return static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), t0 - 1e-12) - t.begin());
}

double peak_to_peak(const std::vector<double> &x, std::size_t a, std::size_t b) {
    if (a >= b)
        return 0.0;
    const auto [lo, hi] = std::minmax_element(x.begin() + a, x.begin() + b);
    return *hi - *lo;
}

} // namespace

void Scenario::validate() const {
    model.validate();
    if (!(dt > 0.0 && dt <= 0.01))
        throw InvalidConfig("dt must lie in (0, 0.01]");
    if (!(duration > 0.0) || !std::isfinite(duration))
        throw InvalidConfig("duration must be positive");
    if (decimation < 1)
        throw InvalidConfig("decimation must be at least 1");
    if (control_period < 0.0)
        throw InvalidConfig("control_period must be non-negative");
    if (!(window > 0.0) || !(fit_window > 0.0))
        throw InvalidConfig("metric windows must be positive");
    for (double b : {band_attitude, band_movers, band_com, band_outer})
        if (!(b > 0.0))
            throw InvalidConfig("settling bands must be positive");
    if (initial.q.size() != model.dof() || initial.qd.size() != model.dof())
        throw InvalidConfig("initial state size does not match the model");
    check_state(model, initial.q, initial.qd);
    if (controller.kind != ControllerKind::free) {
        controller.gains.validate(model.link_count());
        if (controller.setpoint.q_r_des.size() != model.link_count())
            throw InvalidConfig("setpoint joint target size does not match the model");
    }
    if (controller.disturbance.size() != 0 && controller.disturbance.size() != model.dof())
        throw InvalidConfig("disturbance must be empty or one entry per coordinate");
}

bool Record::operator==(const Record &o) const {
    return t == o.t && q == o.q && qd == o.qd && u == o.u && xc == o.xc && kinetic == o.kinetic &&
           potential == o.potential;
}

bool Trajectory::operator==(const Trajectory &o) const {
    return link_count == o.link_count && records == o.records;
}

std::string to_string(Classification c) {
    switch (c) {
    case Classification::converged: return "converged";
    case Classification::limit_cycle: return "limit_cycle";
    case Classification::diverged: return "diverged";
    case Classification::inconclusive: return "inconclusive";
    }
    return "?";
}

Classification classify(const std::vector<double> &t, const std::vector<double> &x, double band,
                        double window, double escape_bound) {
    if (t.size() != x.size() || t.size() < 2)
        throw InvalidConfig("classify needs matching series of at least two samples");
    const double span = t.back() - t.front();
    if (window > span / 3.0 + 1e-12)
        throw InvalidConfig("classification window exceeds a third of the record");
    for (double v : x)
        if (!std::isfinite(v) || std::abs(v) > escape_bound)
            return Classification::diverged;
    const std::size_t last = first_at(t, t.back() - window);
    const std::size_t prev = first_at(t, t.back() - 2.0 * window);
    bool inside = true;
    for (std::size_t i = last; i < x.size(); ++i)
        inside = inside && std::abs(x[i]) <= band;
    if (inside)
        return Classification::converged;
    const double a_last = peak_to_peak(x, last, x.size());
    const double a_prev = peak_to_peak(x, prev, last);
    if (a_last > 2.0 * band && a_prev > 0.0) {
        const double ratio = a_last / a_prev;
        if (ratio >= 0.8 && ratio <= 1.25)
            return Classification::limit_cycle;
    }
    return Classification::inconclusive;
}

Classification combine(const std::vector<Classification> &parts) {
    auto any = [&](Classification c) { return std::find(parts.begin(), parts.end(), c) != parts.end(); };
    if (any(Classification::diverged))
        return Classification::diverged;
    if (!parts.empty() && std::all_of(parts.begin(), parts.end(), [](Classification c) {
            return c == Classification::converged;
        }))
        return Classification::converged;
    if (any(Classification::limit_cycle))
        return Classification::limit_cycle;
    return Classification::inconclusive;
}

double settling_time(const std::vector<double> &t, const std::vector<double> &x, double band) {
    for (std::size_t i = x.size(); i-- > 0;) {
        if (!(std::abs(x[i]) <= band))
            return i + 1 < x.size() ? t[i + 1] : kNaN;
    }
    return t.empty() ? kNaN : t.front();
}

double trailing_amplitude(const std::vector<double> &t, const std::vector<double> &x,
                          double window) {
    if (t.empty())
        return 0.0;
    return peak_to_peak(x, first_at(t, t.back() - window), x.size());
}

double decay_rate(const std::vector<double> &t, const std::vector<double> &x, double window) {
    if (t.size() < 2)
        return kNaN;
    const double t0 = t.back() - window;
    std::vector<double> tc, lx;
    std::size_t i = first_at(t, t0);
    for (double a = t0; a < t.back() - 1e-12; a += 1.0) {
        double peak = 0.0;
        std::size_t count = 0;
        for (; i < t.size() && t[i] < a + 1.0 - 1e-12; ++i, ++count)
            peak = std::max(peak, std::abs(x[i]));
        if (count > 0 && peak > 1e-13) {
            tc.push_back(a + 0.5);
            lx.push_back(std::log(peak));
        }
    }
    if (tc.size() < 3)
        return kNaN;
    const double n = static_cast<double>(tc.size());
    double st = 0, sl = 0, stt = 0, stl = 0;
    for (std::size_t k = 0; k < tc.size(); ++k) {
        st += tc[k];
        sl += lx[k];
        stt += tc[k] * tc[k];
        stl += tc[k] * lx[k];
    }
    const double slope = (n * stl - st * sl) / (n * stt - st * st);
    return -slope;
}

Acceleration closed_loop(const SystemModel &model, const Controller &ctrl, const State &state) {
    ControlOutput out = compute_control(ctrl.kind, model, state, ctrl.setpoint, ctrl.gains);
    if (out.terms.M.size() == 0)
        out.terms = evaluate(model, state.q, state.qd, CoriolisDetail::vector);
    Acceleration a;
    a.tau = with_disturbance(ctrl, out.u.generalized());
    a.qdd = forward_dynamics(out.terms, a.tau);
    return a;
}

State step(const SystemModel &model, const State &state, const Controller &ctrl, double dt) {
    return rk4(model, state, ctrl, dt, nullptr, nullptr, nullptr);
}

RunResult run(const Scenario &sc) {
    sc.validate();
    const auto start = std::chrono::steady_clock::now();
    RunResult res;
    res.trajectory.link_count = sc.model.link_count();
    const long steps = std::lround(sc.duration / sc.dt);
    const long hold = sc.control_period > 0.0
                          ? std::max(1L, std::lround(sc.control_period / sc.dt))
                          : 0;
    res.trajectory.records.reserve(static_cast<std::size_t>(steps / sc.decimation + 2));
    res.work.reserve(res.trajectory.records.capacity());

    State s = sc.initial;
    s.t = 0.0;
    double work = 0.0;
    VectorXd held, u0;
    std::string escape;
    try {
        for (long k = 0; k < steps; ++k) {
            if (hold > 0 && k % hold == 0)
                held = compute_control(sc.controller.kind, sc.model, s, sc.controller.setpoint,
                                       sc.controller.gains)
                           .u.stacked();
            const double w_before = work;
            State next = rk4(sc.model, s, sc.controller, sc.dt, hold > 0 ? &held : nullptr,
                             &work, &u0);
            if (k % sc.decimation == 0) {
                res.trajectory.records.push_back(make_record(sc.model, s, u0));
                res.work.push_back(w_before);
            }
            // Accumulate time from the step count so it does not drift.
            next.t = static_cast<double>(k + 1) * sc.dt;
            s = std::move(next);
        }
        if (steps % sc.decimation == 0) {
            const VectorXd u = compute_control(sc.controller.kind, sc.model, s,
                                               sc.controller.setpoint, sc.controller.gains)
                                   .u.stacked();
            res.trajectory.records.push_back(make_record(sc.model, s, u));
            res.work.push_back(work);
        }
    } catch (const StateEscape &e) {
        escape = e.what();
    } catch (const SingularCoupling &e) {
        escape = e.what();
    } catch (const IllConditionedTransform &e) {
        escape = e.what();
    } catch (const SingularMass &e) {
        escape = e.what();
    }
    res.report = analyze(sc, res.trajectory, res.work);
    if (!escape.empty()) {
        res.report.escaped = true;
        res.report.escape_reason = escape;
        for (auto &[name, sig] : res.report.signals)
            if (sig.classification != Classification::converged)
                sig.classification = Classification::diverged;
    }
    res.report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

OutcomeReport analyze(const Scenario &sc, const Trajectory &traj, const std::vector<double> &work) {
    OutcomeReport rep;
    rep.scenario = sc.name;
    rep.controller = to_string(sc.controller.kind);
    const auto &recs = traj.records;
    if (recs.empty())
        return rep;
    rep.end_time = recs.back().t;
    const int n = traj.link_count;
    const Setpoint &sp = sc.controller.setpoint;
    const bool has_target = sp.q_r_des.size() == n;

    std::vector<double> t;
    t.reserve(recs.size());
    for (const auto &r : recs)
        t.push_back(r.t);
    const double span = t.back() - t.front();
    const double window = std::min(sc.window, span / 3.0);

    auto series = [&](auto &&f) {
        std::vector<double> x;
        x.reserve(recs.size());
        for (const auto &r : recs)
            x.push_back(f(r));
        return x;
    };
    auto add_signal = [&](const std::string &name, std::vector<std::vector<double>> comps,
                          double band, double bound) {
        SignalReport sig;
        sig.band = band;
        sig.escape_bound = bound;
        std::vector<Classification> parts;
        for (const auto &x : comps) {
            parts.push_back(span > 0.0 ? classify(t, x, band, window, bound)
                                       : Classification::inconclusive);
            const double ts = settling_time(t, x, band);
            sig.settling_time = std::isnan(ts) || std::isnan(sig.settling_time)
                                    ? kNaN
                                    : std::max(sig.settling_time, ts);
            sig.trailing_amplitude =
                std::max(sig.trailing_amplitude, trailing_amplitude(t, x, window));
            sig.max_abs = std::max(sig.max_abs, max_abs(x));
        }
        sig.classification = combine(parts);
        rep.signals[name] = sig;
    };

    constexpr double kTwoPi = 2.0 * M_PI;
    add_signal("phi",
               {series([](const Record &r) { return r.q[dof::roll]; }),
                series([](const Record &r) { return r.q[dof::pitch]; })},
               sc.band_attitude, 1.0);
    add_signal("xc",
               {series([](const Record &r) { return r.xc[0]; }),
                series([](const Record &r) { return r.xc[1]; })},
               sc.band_com, 2.0);
    add_signal("q_m",
               {series([&](const Record &r) { return r.q[dof::mover1] - sp.q_m_star[0]; }),
                series([&](const Record &r) { return r.q[dof::mover2] - sp.q_m_star[1]; })},
               sc.band_movers, 2.0);
    add_signal("gamma", {series([&](const Record &r) { return r.q[dof::yaw] - sp.gamma_des; })},
               sc.band_outer, kTwoPi);
    if (n > 0) {
        std::vector<std::vector<double>> joints;
        for (int i = 0; i < n; ++i)
            joints.push_back(series([&](const Record &r) {
                return r.q[dof::arm + i] - (has_target ? sp.q_r_des[i] : 0.0);
            }));
        add_signal("q_r", std::move(joints), sc.band_outer, kTwoPi);
    }

    const auto err = series([&](const Record &r) {
        Eigen::Vector4d e;
        e << r.xc, r.q.segment<2>(dof::mover1) - sp.q_m_star;
        return e.norm();
    });
    rep.decay_rate = decay_rate(t, err, std::min(sc.fit_window, span));

    // Energy bookkeeping relative to the largest energy exchange in the run.
    const double e0 = recs.front().kinetic + recs.front().potential;
    double scale = 1e-12, drift = 0.0, audit = 0.0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const double de = recs[i].kinetic + recs[i].potential - e0;
        const double w = i < work.size() ? work[i] : 0.0;
        scale = std::max({scale, recs[i].kinetic, std::abs(de), std::abs(w)});
        drift = std::max(drift, std::abs(de));
        audit = std::max(audit, std::abs(de - w));
    }
    rep.energy_drift = drift / scale;
    rep.energy_audit = work.empty() ? kNaN : audit / scale;

    double mover_peak = 0.0;
    for (const auto &r : recs)
        mover_peak = std::max(mover_peak, r.q.segment<2>(dof::mover1).cwiseAbs().maxCoeff());
    if (mover_peak > sc.model.movers.travel_limit)
        rep.warnings.push_back("movers exceeded the travel limit (peak " +
                               std::to_string(mover_peak) + " m)");
    if (sc.controller.kind == ControllerKind::proposed && !sc.controller.gains.satisfies_ordering())
        rep.warnings.push_back("CoM gains are not ten times the mover gains");
    return rep;
}

} // namespace pendusim
