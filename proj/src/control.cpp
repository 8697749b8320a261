#include "pendusim/control.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "pendusim/errors.hpp"

namespace pendusim {

namespace {

bool all_positive(const VectorXd &v) {
    return v.size() > 0 && (v.array() > 0.0).all() && v.allFinite();
}

Vec2 phi_of(const VectorXd &q) { return q.segment<2>(dof::roll); }
Vec2 movers_of(const VectorXd &q) { return q.segment<2>(dof::mover1); }

Mat2 attitude_mover_mass(const DynamicsTerms &terms) {
    return terms.M.block<2, 2>(dof::roll, dof::mover1);
}

/// M_pm^-1 (D_phi phid + K_phi phi - C_pm qmd - g_phi)
Vec2 attitude_law(const State &state, const DynamicsTerms &terms, const Gains &gains) {
    if (terms.C_pm.hasNaN())
        throw InvalidConfig("attitude law needs the roll/pitch-mover Coriolis block");
    const Mat2 m_pm = attitude_mover_mass(terms);
    const Eigen::JacobiSVD<Mat2> svd(m_pm);
    const Vec2 s = svd.singularValues();
    const double cond = s[1] > 0.0 ? s[0] / s[1] : INFINITY;
    if (!(cond <= 1e8))
        throw SingularCoupling("roll/pitch-mover mass block is singular", cond);
    const Vec2 rhs = gains.D_phi.cwiseProduct(phi_of(state.qd)) +
                     gains.K_phi.cwiseProduct(phi_of(state.q)) -
                     terms.C_pm * movers_of(state.qd) - terms.g.segment<2>(dof::roll);
    return m_pm.partialPivLu().solve(rhs);
}

Vec2 com_feedback(const TransformedTerms &tr, const Gains &gains) {
    const Mat2 m_cm = tr.Mbar.block<2, 2>(0, dof::mover1);
    const Vec2 xcd = tr.qbar_dot.head<2>();
    return m_cm.transpose() * (gains.D_c.cwiseProduct(xcd) + gains.K_c.cwiseProduct(tr.xc));
}

Vec2 mover_pd(const State &state, const Setpoint &sp, const Gains &gains) {
    return -gains.D_m.cwiseProduct(movers_of(state.qd)) -
           gains.K_m.cwiseProduct(movers_of(state.q) - sp.q_m_star);
}

void check_setpoint(const SystemModel &model, const Setpoint &sp) {
    if (sp.q_r_des.size() != model.link_count())
        throw InvalidConfig("setpoint joint target has " + std::to_string(sp.q_r_des.size()) +
                            " entries, model has " + std::to_string(model.link_count()) +
                            " links");
}

} // namespace

Gains Gains::defaults(int link_count) {
    Gains g;
    g.D_r = VectorXd::Constant(link_count, 10.0);
    g.K_r = VectorXd::Constant(link_count, 25.0);
    return g;
}

void Gains::validate(int link_count) const {
    if (D_r.size() != link_count || K_r.size() != link_count)
        throw InvalidConfig("joint gains must have one entry per link");
    auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!positive(D_gamma) || !positive(K_gamma))
        throw InvalidConfig("yaw gains must be positive");
    if (link_count > 0 && (!all_positive(D_r) || !all_positive(K_r)))
        throw InvalidConfig("joint gains must be positive");
    for (const Vec2 *v : {&D, &D_c, &K_c, &D_m, &K_m, &D_phi, &K_phi})
        if (!all_positive(*v))
            throw InvalidConfig("diagonal gains must be positive");
}

bool Gains::satisfies_ordering() const {
    const double low = std::min(D_c.minCoeff(), K_c.minCoeff());
    const double high = std::max(D_m.maxCoeff(), K_m.maxCoeff());
    return low >= 10.0 * high;
}

ControlInput ControlInput::from_stacked(const VectorXd &u) {
    if (u.size() < 3)
        throw InvalidConfig("control vector needs at least yaw and two movers");
    ControlInput c;
    c.tau_yaw = u[0];
    c.tau_m = u.segment<2>(1);
    c.tau_r = u.tail(u.size() - 3);
    return c;
}

VectorXd ControlInput::stacked() const {
    VectorXd u(3 + tau_r.size());
    u << tau_yaw, tau_m, tau_r;
    return u;
}

VectorXd ControlInput::generalized() const {
    VectorXd tau(5 + tau_r.size());
    tau << 0.0, 0.0, stacked();
    return tau;
}

OuterRefs outer_refs(const State &state, const Setpoint &sp, const Gains &gains) {
    const auto n = sp.q_r_des.size();
    OuterRefs r;
    r.yaw_dd = -gains.D_gamma * state.qd[dof::yaw] -
               gains.K_gamma * (state.q[dof::yaw] - sp.gamma_des);
    r.joints_dd = -gains.D_r.cwiseProduct(state.qd.segment(dof::arm, n)) -
                  gains.K_r.cwiseProduct(state.q.segment(dof::arm, n) - sp.q_r_des);
    return r;
}

VectorXd output_reference(const OuterRefs &outer, const Vec2 &mover_dd) {
    VectorXd y(3 + outer.joints_dd.size());
    y << outer.yaw_dd, mover_dd, outer.joints_dd;
    return y;
}

Vec2 qm_ref_motivating(const State &state, const DynamicsTerms &terms, const Gains &gains) {
    return attitude_law(state, terms, gains);
}

Vec2 qm_ref_remark1(const State &, const TransformedTerms &tr, const Gains &gains) {
    return com_feedback(tr, gains);
}

Vec2 qm_ref_remark2(const State &state, const DynamicsTerms &terms, const Setpoint &sp,
                    const Gains &gains) {
    return attitude_law(state, terms, gains) + mover_pd(state, sp, gains);
}

Vec2 qm_ref_proposed(const State &state, const TransformedTerms &tr, const Setpoint &sp,
                     const Gains &gains) {
    return gains.D.cwiseProduct(com_feedback(tr, gains) + mover_pd(state, sp, gains));
}

ControlInput pfl_input_standard(const DynamicsTerms &terms, const VectorXd &y_dd_ref) {
    const auto n = terms.M.rows();
    const auto m = n - 2;
    if (y_dd_ref.size() != m)
        throw InvalidConfig("output reference has the wrong size");
    const Eigen::LLT<MatrixXd> llt(terms.M);
    if (llt.info() != Eigen::Success)
        throw SingularMass("mass matrix is not positive definite", INFINITY);
    // With B = [0; I], B^T M^-1 B is the lower-right block of M^-1.
    MatrixXd b = MatrixXd::Zero(n, m);
    b.bottomRows(m).setIdentity();
    const MatrixXd minv_b = llt.solve(b);
    const MatrixXd a = minv_b.bottomRows(m);
    const VectorXd bias = llt.solve(terms.h + terms.g).tail(m);
    return ControlInput::from_stacked(a.ldlt().solve(bias + y_dd_ref));
}

ControlInput pfl_input_transformed(const DynamicsTerms &terms, const TransformedTerms &tr,
                                   const VectorXd &y_dd_ref) {
    const auto n = tr.Mbar.rows();
    const auto m = n - 2;
    if (y_dd_ref.size() != m)
        throw InvalidConfig("output reference has the wrong size");
    const Eigen::LLT<MatrixXd> llt(tr.Mbar);
    if (llt.info() != Eigen::Success)
        throw SingularMass("transformed mass matrix is not positive definite", INFINITY);
    const MatrixXd bt_tinv = tr.T_inv.bottomRows(m);             // B^T T^-1
    const MatrixXd tinvt_b = tr.T_inv.transpose().rightCols(m); // T^-T B
    const MatrixXd a = bt_tinv * llt.solve(tinvt_b);
    const VectorXd bias =
        bt_tinv * (llt.solve(tr.cbar_qbar_dot + tr.gbar) + tr.Tdot * terms.qd);
    return ControlInput::from_stacked(a.partialPivLu().solve(bias + y_dd_ref));
}

Vec2 level_attitude_gravity(const SystemModel &model, const Vec2 &q_m, const VectorXd &q_r) {
    VectorXd q = VectorXd::Zero(model.dof());
    q.segment<2>(dof::mover1) = q_m;
    q.segment(dof::arm, q_r.size()) = q_r;
    return gravity_vector(model, q).segment<2>(dof::roll);
}

EquilibriumResult solve_equilibrium_qm(const SystemModel &model, const VectorXd &q_r_des,
                                       const EquilibriumOptions &opt) {
    if (q_r_des.size() != model.link_count())
        throw InvalidConfig("joint target size does not match the model");
    Vec2 lo = Vec2::Constant(-INFINITY), hi = Vec2::Constant(INFINITY);
    if (opt.respect_travel_limit) {
        lo.setConstant(-model.movers.travel_limit);
        hi.setConstant(model.movers.travel_limit);
    }
    auto residual = [&](const Vec2 &x) { return level_attitude_gravity(model, x, q_r_des); };

    EquilibriumResult res;
    res.q_m = Vec2::Zero();
    Vec2 r = residual(res.q_m);
    res.residual = r.norm();
    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        if (res.residual < opt.tolerance)
            return res;
        Mat2 jac;
        for (int j = 0; j < 2; ++j) {
            Vec2 e = Vec2::Zero();
            e[j] = opt.fd_step;
            jac.col(j) = (residual(res.q_m + e) - residual(res.q_m - e)) / (2.0 * opt.fd_step);
        }
        const Vec2 step = -jac.partialPivLu().solve(r);
        if (!step.allFinite())
            break;
        double lambda = 1.0;
        bool improved = false;
        for (int k = 0; k < 40; ++k, lambda *= 0.5) {
            const Vec2 trial = (res.q_m + lambda * step).cwiseMax(lo).cwiseMin(hi);
            const Vec2 rt = residual(trial);
            if (rt.norm() < res.residual) {
                res.q_m = trial;
                r = rt;
                res.residual = rt.norm();
                improved = true;
                break;
            }
        }
        if (!improved)
            break;
    }
    if (res.residual < std::max(opt.tolerance, opt.accept_tolerance))
        return res;
    throw NoConvergence("mover equilibrium not found within the travel limit", res.residual);
}

std::string to_string(ControllerKind kind) {
    switch (kind) {
    case ControllerKind::free: return "free";
    case ControllerKind::hold: return "hold";
    case ControllerKind::motivating: return "motivating";
    case ControllerKind::remark1: return "remark1";
    case ControllerKind::remark2: return "remark2";
    case ControllerKind::proposed: return "proposed";
    }
    return "?";
}

ControllerKind controller_from_string(const std::string &name) {
    for (auto k : {ControllerKind::free, ControllerKind::hold, ControllerKind::motivating,
                   ControllerKind::remark1, ControllerKind::remark2, ControllerKind::proposed})
        if (to_string(k) == name)
            return k;
    throw InvalidConfig("unknown controller '" + name + "'");
}

ControlOutput compute_control(ControllerKind kind, const SystemModel &model, const State &state,
                              const Setpoint &sp, const Gains &gains) {
    ControlOutput out;
    const int n = model.link_count();
    if (kind == ControllerKind::free) {
        out.u.tau_r = VectorXd::Zero(n);
        return out;
    }
    if (kind == ControllerKind::hold) {
        out.terms = evaluate(model, state.q, state.qd, CoriolisDetail::vector);
        out.u = pfl_input_standard(out.terms, VectorXd::Zero(3 + n));
        return out;
    }
    check_setpoint(model, sp);
    const OuterRefs outer = outer_refs(state, sp, gains);
    switch (kind) {
    case ControllerKind::motivating:
    case ControllerKind::remark2: {
        out.terms = evaluate(model, state.q, state.qd, CoriolisDetail::attitude_coupling);
        out.mover_dd_ref = kind == ControllerKind::motivating
                               ? qm_ref_motivating(state, out.terms, gains)
                               : qm_ref_remark2(state, out.terms, sp, gains);
        out.u = pfl_input_standard(out.terms, output_reference(outer, out.mover_dd_ref));
        break;
    }
    case ControllerKind::remark1:
    case ControllerKind::proposed: {
        out.terms = evaluate(model, state.q, state.qd, CoriolisDetail::vector);
        const TransformedTerms tr = transform(model, out.terms);
        out.mover_dd_ref = kind == ControllerKind::remark1
                               ? qm_ref_remark1(state, tr, gains)
                               : qm_ref_proposed(state, tr, sp, gains);
        out.u = pfl_input_transformed(out.terms, tr, output_reference(outer, out.mover_dd_ref));
        break;
    }
    default:
        break;
    }
    return out;
}

std::vector<RestPoint> find_rest_points(ControllerKind kind, const SystemModel &model,
                                        const Setpoint &sp, const Gains &gains,
                                        const std::vector<Eigen::Vector4d> &seeds,
                                        double merge_tol) {
    check_setpoint(model, sp);
    using Vec4 = Eigen::Vector4d;
    auto make_state = [&](const Vec4 &z) {
        State s = State::zero(model);
        s.q.segment<2>(dof::roll) = z.head<2>();
        s.q[dof::yaw] = sp.gamma_des;
        s.q.segment<2>(dof::mover1) = z.tail<2>();
        s.q.segment(dof::arm, sp.q_r_des.size()) = sp.q_r_des;
        return s;
    };
    // [g_phi; mover_dd_ref] at zero rates; outer loops are at rest by construction.
    auto residual = [&](const Vec4 &z) {
        const State s = make_state(z);
        Vec4 f;
        f.head<2>() = gravity_vector(model, s.q).segment<2>(dof::roll);
        switch (kind) {
        case ControllerKind::motivating:
        case ControllerKind::remark2: {
            const DynamicsTerms t =
                evaluate(model, s.q, s.qd, CoriolisDetail::attitude_coupling);
            f.tail<2>() = kind == ControllerKind::motivating ? qm_ref_motivating(s, t, gains)
                                                             : qm_ref_remark2(s, t, sp, gains);
            break;
        }
        case ControllerKind::remark1:
        case ControllerKind::proposed: {
            const TransformedTerms t = transform(model, s.q, s.qd);
            f.tail<2>() = kind == ControllerKind::remark1 ? qm_ref_remark1(s, t, gains)
                                                          : qm_ref_proposed(s, t, sp, gains);
            break;
        }
        default:
            f.tail<2>().setZero();
        }
        return f;
    };
    auto safe_residual = [&](const Vec4 &z, Vec4 &f) {
        try {
            f = residual(z);
            return f.allFinite();
        } catch (const Error &) {
            return false;
        }
    };

    std::vector<RestPoint> roots;
    for (const Vec4 &seed : seeds) {
        Vec4 z = seed, f;
        if (!safe_residual(z, f))
            continue;
        for (int it = 0; it < 100 && f.norm() > 1e-10; ++it) {
            Eigen::Matrix4d jac;
            bool ok = true;
            for (int j = 0; j < 4 && ok; ++j) {
                const double h = 1e-6 * std::max(1.0, std::abs(z[j]));
                Vec4 e = Vec4::Zero(), fp, fm;
                e[j] = h;
                ok = safe_residual(z + e, fp) && safe_residual(z - e, fm);
                jac.col(j) = (fp - fm) / (2.0 * h);
            }
            if (!ok)
                break;
            const Vec4 step = -jac.fullPivLu().solve(f);
            if (!step.allFinite())
                break;
            bool improved = false;
            double lambda = 1.0;
            for (int k = 0; k < 30; ++k, lambda *= 0.5) {
                Vec4 ft;
                const Vec4 trial = z + lambda * step;
                if (safe_residual(trial, ft) && ft.norm() < f.norm()) {
                    z = trial;
                    f = ft;
                    improved = true;
                    break;
                }
            }
            if (!improved)
                break;
        }
        if (!(f.norm() <= 1e-9))
            continue;
        RestPoint rp;
        rp.phi = z.head<2>();
        rp.q_m = z.tail<2>();
        rp.xc = com_xy(model, make_state(z).q);
        rp.residual = f.norm();
        const bool duplicate = std::any_of(roots.begin(), roots.end(), [&](const RestPoint &o) {
            return (o.phi - rp.phi).norm() + (o.q_m - rp.q_m).norm() < merge_tol;
        });
        if (!duplicate)
            roots.push_back(rp);
    }
    return roots;
}

} // namespace pendusim
