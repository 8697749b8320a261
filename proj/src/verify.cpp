#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "pendusim/cli.hpp"
#include "pendusim/dynamics.hpp"
#include "pendusim/errors.hpp"

namespace pendusim {

namespace {

/// Running max of a normalized error against a fixed tolerance.
struct Tally {
    PropertyResult r;

    Tally(std::string name, double tol) {
        r.name = std::move(name);
        r.tolerance = tol;
        r.passed = true;
    }
    void add(double err) {
        ++r.samples;
        if (!(err <= r.worst))
            r.worst = std::isnan(err) ? INFINITY : err;
        if (!(err <= r.tolerance))
            r.passed = false;
    }
    void fail(const std::string &why) {
        ++r.samples;
        r.passed = false;
        if (r.detail.empty())
            r.detail = why;
    }
};

double uniform(std::mt19937_64 &rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

MatrixXd mdot_fd(const SystemModel &model, const VectorXd &q, const VectorXd &qd) {
    const double h = 1e-6;
    return (mass_matrix(model, q + h * qd) - mass_matrix(model, q - h * qd)) / (2.0 * h);
}

VectorXd potential_gradient_fd(const SystemModel &model, const VectorXd &q) {
    const double h = 1e-6;
    VectorXd grad(q.size());
    VectorXd x = q;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        x[i] = q[i] + h;
        const double up = potential_energy(model, x);
        x[i] = q[i] - h;
        grad[i] = (up - potential_energy(model, x)) / (2.0 * h);
        x[i] = q[i];
    }
    return grad;
}

Matrix2X com_jacobian_fd(const SystemModel &model, const VectorXd &q) {
    const double h = 1e-6;
    Matrix2X j(2, q.size());
    VectorXd x = q;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        x[i] = q[i] + h;
        const Vec2 up = com_xy(model, x);
        x[i] = q[i] - h;
        j.col(i) = (up - com_xy(model, x)) / (2.0 * h);
        x[i] = q[i];
    }
    return j;
}

} // namespace

State random_state(const SystemModel &model, std::mt19937_64 &rng) {
    State s = State::zero(model);
    const double pi = std::numbers::pi;
    s.q[dof::roll] = uniform(rng, -0.3, 0.3);
    s.q[dof::pitch] = uniform(rng, -0.3, 0.3);
    s.q[dof::yaw] = uniform(rng, -pi, pi);
    for (int k = 0; k < 2; ++k)
        s.q[dof::mover1 + k] = uniform(rng, -model.movers.travel_limit, model.movers.travel_limit);
    for (int i = dof::arm; i < model.dof(); ++i)
        s.q[i] = uniform(rng, -pi, pi);
    for (int i = 0; i < model.dof(); ++i)
        s.qd[i] = uniform(rng, -1.0, 1.0);
    return s;
}

std::vector<PropertyResult> verify_suite(const SystemModel &model, std::uint64_t seed,
                                         int samples) {
    model.validate();
    if (samples < 1)
        throw InvalidConfig("need at least one sample");
    std::mt19937_64 rng(seed);
    const int n = model.dof();
    const int m = model.input_count();

    Tally spd("mass_matrix_spd", 1e-10);
    Tally skew("skew_symmetry", 1e-5);
    Tally grav("gravity_gradient", 1e-6);
    Tally cor("coriolis_paths", 1e-9);
    Tally pfl_std("pfl_standard", 1e-7);
    Tally pfl_tr("pfl_transformed", 1e-7);
    Tally pfl_same("pfl_agreement", 1e-6);
    Tally com_j("com_jacobian", 1e-6);
    Tally tr_dyn("transform_consistency", 1e-8);

    for (int k = 0; k < samples; ++k) {
        const State s = random_state(model, rng);
        const auto &q = s.q;
        const auto &qd = s.qd;
        try {
            const MatrixXd M = mass_matrix(model, q);
            const DynamicsTerms full = evaluate(model, q, qd, CoriolisDetail::matrix);
            const double sym = (full.M - full.M.transpose()).norm() / full.M.norm();
            const double lowest = Eigen::SelfAdjointEigenSolver<MatrixXd>(M).eigenvalues()[0];
            if (!(lowest > 0.0))
                spd.fail("mass matrix not positive definite (lowest eigenvalue " +
                         std::to_string(lowest) + ")");
            else
                spd.add(sym);

            const MatrixXd defect = mdot_fd(model, q, qd) - 2.0 * full.C;
            skew.add((defect + defect.transpose()).norm() / 2.0 / (1.0 + qd.squaredNorm()));

            grav.add((full.g - potential_gradient_fd(model, q)).norm() / (1.0 + full.g.norm()));

            const DynamicsTerms fast = evaluate(model, q, qd, CoriolisDetail::attitude_coupling);
            const VectorXd cqd = full.C * qd;
            cor.add(std::max((fast.h - cqd).norm() / (1.0 + cqd.norm()),
                             (fast.C_pm - full.C_pm).norm() / (1.0 + full.C_pm.norm())));

            VectorXd y(m);
            for (int i = 0; i < m; ++i)
                y[i] = uniform(rng, -1.0, 1.0);
            const ControlInput u1 = pfl_input_standard(fast, y);
            pfl_std.add((forward_dynamics(fast, u1.generalized()).tail(m) - y).norm());
            const TransformedTerms tr = transform(model, fast);
            const ControlInput u2 = pfl_input_transformed(fast, tr, y);
            pfl_tr.add((forward_dynamics(fast, u2.generalized()).tail(m) - y).norm());
            pfl_same.add((u1.stacked() - u2.stacked()).norm() / (1.0 + u1.stacked().norm()));

            com_j.add((tr.T.topRows(2) - com_jacobian_fd(model, q)).norm());
            VectorXd tau(n);
            for (int i = 0; i < n; ++i)
                tau[i] = uniform(rng, -50.0, 50.0);
            const VectorXd qdd = forward_dynamics(fast, tau);
            const VectorXd expect = tr.T * qdd + tr.Tdot * qd;
            tr_dyn.add((transformed_forward_dynamics(tr, tau) - expect).norm() /
                       (1.0 + expect.norm()));
        } catch (const Error &e) {
            for (Tally *t : {&spd, &skew, &grav, &cor, &pfl_std, &pfl_tr, &pfl_same, &com_j, &tr_dyn})
                t->fail(e.what());
        }
    }

    // Free swing: total energy is conserved by the flow, so any change is
    // integrator error.
    Tally energy("energy_conservation", 1e-6);
    {
        State s = State::zero(model);
        s.q[dof::roll] = 0.1;
        const Controller free{ControllerKind::free, Gains::defaults(model.link_count()), {}, {}};
        const double e0 = kinetic_energy(model, s.q, s.qd) + potential_energy(model, s.q);
        double drift = 0.0, peak = 0.0;
        try {
            for (int k = 0; k < 2000; ++k) {
                s = step(model, s, free, 1e-3);
                const double ke = kinetic_energy(model, s.q, s.qd);
                peak = std::max(peak, ke);
                drift = std::max(drift, std::abs(ke + potential_energy(model, s.q) - e0));
            }
            energy.add(drift / peak);
        } catch (const Error &e) {
            energy.fail(e.what());
        }
    }

    Tally eq("equilibrium_residual", 1e-10);
    {
        const double pi = std::numbers::pi;
        const int trials = std::min(samples, 20);
        for (int k = 0; k <= trials; ++k) {
            VectorXd qr = VectorXd::Zero(model.link_count());
            if (k > 0)
                for (Eigen::Index i = 0; i < qr.size(); ++i)
                    qr[i] = uniform(rng, -pi, pi);
            try {
                const auto res = solve_equilibrium_qm(model, qr);
                const double r = level_attitude_gravity(model, res.q_m, qr).norm();
                // the upright arm is balanced with the movers centered
                eq.add(k == 0 ? std::max(r, res.q_m.norm()) : r);
            } catch (const NoConvergence &e) {
                eq.fail(std::string(e.what()) + " (residual " + std::to_string(e.residual) + ")");
            }
        }
    }

    return {spd.r,      skew.r,    grav.r,   cor.r,    pfl_std.r, pfl_tr.r,
            pfl_same.r, com_j.r,   tr_dyn.r, energy.r, eq.r};
}

} // namespace pendusim
