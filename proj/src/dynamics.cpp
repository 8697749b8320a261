#include "pendusim/dynamics.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "kinematics.hpp"

namespace pendusim {

namespace {

using detail::VecXT;

/// Seed q + eps * direction and return the dual-valued mass matrix.
detail::MatXT<Dual> mass_matrix_along(const SystemModel &model, const VectorXd &q,
                                      const VectorXd &direction) {
    VecXT<Dual> qd(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i)
        qd[i] = Dual(q[i], direction[i]);
    return detail::mass_matrix<Dual>(model, qd);
}

double condition_number(const MatrixXd &a) {
    const Eigen::JacobiSVD<MatrixXd> svd(a);
    const auto &s = svd.singularValues();
    return s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : INFINITY;
}

} // namespace

MatrixXd mass_matrix(const SystemModel &model, const VectorXd &q) {
    const MatrixXd m = detail::mass_matrix<double>(model, q);
    return 0.5 * (m + m.transpose());
}

VectorXd gravity_vector(const SystemModel &model, const VectorXd &q) {
    const auto k = detail::forward_kinematics<double>(model, q);
    VectorXd g = VectorXd::Zero(model.dof());
    for (int b = 0; b < detail::body_count(model); ++b) {
        const Matrix3X jv = detail::linear_jacobian<double>(model, k, b, detail::body_com(k, b));
        g += detail::body_mass(model, b) * model.gravity * jv.row(2).transpose();
    }
    return g;
}

MatrixXd coriolis_matrix(const SystemModel &model, const VectorXd &q, const VectorXd &qd) {
    const int n = model.dof();
    // dM[i] = dM/dq_i
    std::vector<MatrixXd> dM(n);
    VectorXd e = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        // Yaw turns the whole system about the vertical: M does not depend on it.
        if (i == dof::yaw) {
            dM[i] = MatrixXd::Zero(n, n);
            continue;
        }
        e[i] = 1.0;
        dM[i] = mass_matrix_along(model, q, e).unaryExpr([](const Dual &x) { return x.d; });
        e[i] = 0.0;
    }
    // C_jk = 1/2 sum_i (dM_jk/dq_i + dM_ji/dq_k - dM_ik/dq_j) qd_i
    MatrixXd c = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        if (qd[i] == 0.0)
            continue;
        c += 0.5 * qd[i] * dM[i];
    }
    for (int k = 0; k < n; ++k) {
        // column k gets 1/2 dM_ji/dq_k qd_i  -> 1/2 (dM[k] qd)_j
        c.col(k) += 0.5 * dM[k] * qd;
    }
    for (int j = 0; j < n; ++j) {
        // row j gets -1/2 dM_ik/dq_j qd_i -> -1/2 (dM[j]^T qd)_k
        c.row(j) -= 0.5 * (dM[j].transpose() * qd).transpose();
    }
    return c;
}

VectorXd coriolis_vector(const SystemModel &model, const VectorXd &q, const VectorXd &qd) {
    return detail::mass_and_bias(model, q, qd).h;
}

namespace {

/// Mover-only parts of M qd at fixed qd: rows(j, k) = m (E_j x p_k) . v_k is
/// mover k's share of roll/pitch row j, and own(k) = m a_k . v_k is mover row
/// k in full (no other body has a mover column).
template <typename S> struct MoverMomentum {
    Eigen::Matrix<S, 2, 2> rows;
    Eigen::Matrix<S, 2, 1> own;
};

template <typename S>
MoverMomentum<S> mover_momentum(const SystemModel &model, const VecXT<S> &q, const VectorXd &qd) {
    const Mat3T<S> r = rot_rpy<S>(q[dof::roll], q[dof::pitch], q[dof::yaw]);
    const Mat3T<S> e = euler_rate_map<S>(q[dof::roll], q[dof::pitch], q[dof::yaw]);
    const Vec3T<S> center = r * Vec3T<S>(S(0), S(0), S(-model.platform.wire_length));
    const S d(model.platform.rail_height);
    const Vec3T<S> omega = e * qd.head<3>().cast<S>();
    MoverMomentum<S> out;
    for (int k = 0; k < 2; ++k) {
        Vec3T<S> local(S(0), S(0), d);
        local[k] = q[dof::mover1 + k];
        const Vec3T<S> p = center + r * local;
        const Vec3T<S> a = r.col(k);
        const Vec3T<S> v = omega.cross(p) + a * S(qd[dof::mover1 + k]);
        const S m(model.movers.mass);
        out.own[k] = m * a.dot(v);
        for (int j = 0; j < 2; ++j)
            out.rows(j, k) = m * Vec3T<S>(e.col(j)).cross(p).dot(v);
    }
    return out;
}

/// C_jk = 1/2 (Mdot_jk + (dM/dq_k qd)_j - (dM/dq_j qd)_k) for j in roll/pitch,
/// k in movers; only mover bodies contribute to the two partial products.
Mat2 attitude_mover_block(const SystemModel &model, const VectorXd &q, const VectorXd &qd,
                          const MatrixXd &mdot) {
    const auto n = q.size();
    auto seeded = [&](std::initializer_list<int> dirs) {
        VecXT<Dual> x(n);
        for (Eigen::Index i = 0; i < n; ++i)
            x[i] = Dual(q[i], 0.0);
        for (int i : dirs)
            x[i].d = 1.0;
        return mover_momentum<Dual>(model, x, qd);
    };
    // rows(j, k) depends on q_mk only through mover k, so one pass covers both.
    const auto by_mover = seeded({dof::mover1, dof::mover2});
    const auto by_roll = seeded({dof::roll});
    const auto by_pitch = seeded({dof::pitch});
    Mat2 block;
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
            const double dj = (j == 0 ? by_roll : by_pitch).own[k].d;
            block(j, k) =
                0.5 * (mdot(dof::roll + j, dof::mover1 + k) + by_mover.rows(j, k).d - dj);
        }
    return block;
}

} // namespace

Mat2 coriolis_attitude_mover_block(const SystemModel &model, const VectorXd &q,
                                   const VectorXd &qd) {
    return attitude_mover_block(model, q, qd, detail::mass_and_bias(model, q, qd).Mdot);
}

DynamicsTerms evaluate(const SystemModel &model, const VectorXd &q, const VectorXd &qd,
                       CoriolisDetail detail) {
    DynamicsTerms terms;
    terms.q = q;
    terms.qd = qd;
    terms.g = gravity_vector(model, q);
    if (detail == CoriolisDetail::matrix) {
        terms.M = mass_matrix(model, q);
        terms.C = coriolis_matrix(model, q, qd);
        terms.h = terms.C * qd;
        terms.C_pm = terms.C.block<2, 2>(0, dof::mover1);
    } else {
        const auto mb = detail::mass_and_bias(model, q, qd);
        terms.M = mb.M;
        terms.M = 0.5 * (terms.M + terms.M.transpose()).eval();
        terms.h = mb.h;
        if (detail == CoriolisDetail::attitude_coupling)
            terms.C_pm = attitude_mover_block(model, q, qd, mb.Mdot);
    }
    return terms;
}

VectorXd forward_dynamics(const DynamicsTerms &terms, const VectorXd &tau) {
    const Eigen::LLT<MatrixXd> llt(terms.M);
    if (llt.info() != Eigen::Success)
        throw SingularMass("mass matrix is not positive definite", condition_number(terms.M));
    return llt.solve(tau - terms.h - terms.g);
}

VectorXd forward_dynamics(const SystemModel &model, const VectorXd &q, const VectorXd &qd,
                          const VectorXd &tau) {
    return forward_dynamics(evaluate(model, q, qd), tau);
}

MatrixXd com_transform(const SystemModel &model, const VectorXd &q) {
    const int n = model.dof();
    MatrixXd t = MatrixXd::Zero(n, n);
    t.topRows(2) = com_jacobian(model, q);
    t.bottomRightCorner(n - 2, n - 2).setIdentity();
    return t;
}

TransformedTerms transform(const SystemModel &model, const DynamicsTerms &terms) {
    const int n = model.dof();
    TransformedTerms out;
    out.T = com_transform(model, terms.q);

    // Tdot = d/dt T along qd; only the CoM rows vary.
    VecXT<Dual> q_dual(n);
    for (int i = 0; i < n; ++i)
        q_dual[i] = Dual(terms.q[i], terms.qd[i]);
    out.Tdot = MatrixXd::Zero(n, n);
    out.Tdot.topRows(2) =
        detail::com_jacobian<Dual>(model, q_dual).unaryExpr([](const Dual &x) { return x.d; });

    const Eigen::PartialPivLU<MatrixXd> lu(out.T);
    out.T_inv = lu.inverse();
    out.condition = out.T.norm() * out.T_inv.norm();
    if (!(out.condition <= kMaxTransformCondition))
        throw IllConditionedTransform("CoM transform is ill-conditioned", out.condition);

    const MatrixXd t_inv_t = out.T_inv.transpose();
    out.Mbar = t_inv_t * terms.M * out.T_inv;
    out.Mbar = 0.5 * (out.Mbar + out.Mbar.transpose()).eval();
    const MatrixXd m_tinv_tdot = terms.M * out.T_inv * out.Tdot;
    if (terms.has_coriolis_matrix())
        out.Cbar = t_inv_t * (terms.C - m_tinv_tdot) * out.T_inv;
    out.gbar = t_inv_t * terms.g;
    out.qbar_dot = out.T * terms.qd;
    out.cbar_qbar_dot = t_inv_t * (terms.h - m_tinv_tdot * terms.qd);
    out.xc = com_xy(model, terms.q);
    return out;
}

TransformedTerms transform(const SystemModel &model, const VectorXd &q, const VectorXd &qd) {
    return transform(model, evaluate(model, q, qd));
}

VectorXd transformed_forward_dynamics(const TransformedTerms &terms, const VectorXd &tau) {
    const Eigen::LLT<MatrixXd> llt(terms.Mbar);
    if (llt.info() != Eigen::Success)
        throw SingularMass("transformed mass matrix is not positive definite",
                           condition_number(terms.Mbar));
    return llt.solve(terms.T_inv.transpose() * tau - terms.cbar_qbar_dot - terms.gbar);
}

MatrixXd actuation_map(int dof_count) {
    MatrixXd b = MatrixXd::Zero(dof_count, dof_count - 2);
    b.bottomRows(dof_count - 2).setIdentity();
    return b;
}

AttitudeBlocks blocks(const DynamicsTerms &terms) {
    if (!terms.has_coriolis_matrix())
        throw InvalidConfig("attitude blocks need terms evaluated with the full Coriolis matrix");
    return {terms.M.block<2, 2>(0, 0), terms.M.block<2, 2>(0, dof::mover1),
            terms.C.block<2, 2>(0, 0), terms.C.block<2, 2>(0, dof::mover1), terms.g.head<2>()};
}

ComBlocks blocks(const TransformedTerms &terms) {
    if (terms.Cbar.size() == 0)
        throw InvalidConfig("CoM blocks need terms evaluated with the full Coriolis matrix");
    return {terms.Mbar.block<2, 2>(0, 0), terms.Mbar.block<2, 2>(0, dof::mover1),
            terms.Cbar.block<2, 2>(0, 0), terms.Cbar.block<2, 2>(0, dof::mover1),
            terms.gbar.head<2>()};
}

double kinetic_energy(const SystemModel &model, const VectorXd &q, const VectorXd &qd) {
    return 0.5 * qd.dot(mass_matrix(model, q) * qd);
}

double potential_energy(const SystemModel &model, const VectorXd &q) {
    const auto k = detail::forward_kinematics<double>(model, q);
    double v = 0.0;
    for (int b = 0; b < detail::body_count(model); ++b)
        v += detail::body_mass(model, b) * model.gravity * detail::body_com(k, b).z();
    return v;
}

} // namespace pendusim
