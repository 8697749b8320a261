#pragma once

// Scalar-generic forward kinematics, Jacobians and mass matrix. Instantiated
// for double (evaluation) and Dual (exact directional derivatives).

#include <array>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "pendusim/model.hpp"
#include "pendusim/spatial.hpp"

namespace pendusim::detail {

// Fixed-capacity storage keeps the inner loops free of heap allocation.
inline constexpr int kMaxDof = 5 + kMaxLinks;
template <typename S> using VecXT = Eigen::Matrix<S, Eigen::Dynamic, 1, 0, kMaxDof, 1>;
template <typename S>
using MatXT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDof, kMaxDof>;
template <typename S> using Mat3XT = Eigen::Matrix<S, 3, Eigen::Dynamic, 0, 3, kMaxDof>;

/// Mass-carrying bodies: 0 platform, 1 and 2 movers, 3 + k link k (0-based).
inline int body_count(const SystemModel &model) { return 3 + model.link_count(); }

template <typename S> struct Kinematics {
    Mat3T<S> platform_rot;
    Mat3T<S> rate_map; ///< world-frame Euler rate map
    Vec3T<S> platform_center;
    Vec3T<S> mover_pos[2];
    std::array<Mat3T<S>, kMaxLinks> link_rot;
    std::array<Vec3T<S>, kMaxLinks> joint_origin;
    std::array<Vec3T<S>, kMaxLinks> joint_axis; ///< world frame
    std::array<Vec3T<S>, kMaxLinks> link_com;
};

template <typename S>
Kinematics<S> forward_kinematics(const SystemModel &model, const VecXT<S> &q) {
    const int n = model.link_count();
    if (n > kMaxLinks)
        throw InvalidConfig("at most " + std::to_string(kMaxLinks) + " links are supported");
    Kinematics<S> k;
    k.platform_rot = rot_rpy<S>(q[dof::roll], q[dof::pitch], q[dof::yaw]);
    k.rate_map = euler_rate_map<S>(q[dof::roll], q[dof::pitch], q[dof::yaw]);
    const Mat3T<S> &r = k.platform_rot;
    const S d(model.platform.rail_height);
    k.platform_center = r * Vec3T<S>(S(0), S(0), S(-model.platform.wire_length));
    k.mover_pos[0] = k.platform_center + r * Vec3T<S>(q[dof::mover1], S(0), d);
    k.mover_pos[1] = k.platform_center + r * Vec3T<S>(S(0), q[dof::mover2], d);

    Mat3T<S> parent_rot = r;
    Vec3T<S> parent_origin = k.platform_center + r * model.platform.mount_offset.cast<S>();
    for (int j = 0; j < n; ++j) {
        const SerialLink &link = model.links[j];
        k.joint_origin[j] = parent_origin + parent_rot * link.parent_offset.cast<S>();
        k.joint_axis[j] = parent_rot * link.axis.cast<S>();
        k.link_rot[j] = parent_rot * axis_angle<S>(link.axis, q[dof::arm + j]);
        k.link_com[j] = k.joint_origin[j] + k.link_rot[j] * link.com_offset.cast<S>();
        parent_rot = k.link_rot[j];
        parent_origin = k.joint_origin[j];
    }
    return k;
}

template <typename S> const Mat3T<S> &body_rot(const Kinematics<S> &k, int body) {
    return body < 3 ? k.platform_rot : k.link_rot[body - 3];
}

template <typename S> const Vec3T<S> &body_com(const Kinematics<S> &k, int body) {
    if (body == 0)
        return k.platform_center;
    if (body < 3)
        return k.mover_pos[body - 1];
    return k.link_com[body - 3];
}

/// Linear-velocity Jacobian of a world point rigidly attached to `body`.
template <typename S>
Mat3XT<S> linear_jacobian(const SystemModel &model, const Kinematics<S> &k, int body,
                          const Vec3T<S> &point) {
    const int nq = model.dof();
    Mat3XT<S> j = Mat3XT<S>::Zero(3, nq);
    // The pivot is the world origin, so attitude rates move every point by omega x p.
    for (int c = 0; c < 3; ++c)
        j.col(c) = k.rate_map.col(c).cross(point);
    if (body == 1)
        j.col(dof::mover1) = k.platform_rot.col(0);
    else if (body == 2)
        j.col(dof::mover2) = k.platform_rot.col(1);
    for (int a = 0; a + 3 <= body; ++a)
        j.col(dof::arm + a) = k.joint_axis[a].cross(point - k.joint_origin[a]);
    return j;
}

template <typename S>
Mat3XT<S> angular_jacobian(const SystemModel &model, const Kinematics<S> &k, int body) {
    const int nq = model.dof();
    Mat3XT<S> j = Mat3XT<S>::Zero(3, nq);
    j.leftCols(3) = k.rate_map;
    for (int a = 0; a + 3 <= body; ++a)
        j.col(dof::arm + a) = k.joint_axis[a];
    return j;
}

inline double body_mass(const SystemModel &model, int body) {
    if (body == 0)
        return model.platform.mass;
    if (body < 3)
        return model.movers.mass;
    return model.links[body - 3].mass;
}

/// Movers are point masses.
inline const Mat3 *body_inertia(const SystemModel &model, int body) {
    if (body == 0)
        return &model.platform.inertia;
    if (body < 3)
        return nullptr;
    return &model.links[body - 3].inertia;
}

template <typename S> MatXT<S> mass_matrix(const SystemModel &model, const VecXT<S> &q) {
    const Kinematics<S> k = forward_kinematics<S>(model, q);
    const int nq = model.dof();
    MatXT<S> m = MatXT<S>::Zero(nq, nq);
    for (int b = 0; b < body_count(model); ++b) {
        const Mat3XT<S> jv = linear_jacobian<S>(model, k, b, body_com(k, b));
        m.noalias() += S(body_mass(model, b)) * (jv.transpose() * jv);
        if (const Mat3 *inertia = body_inertia(model, b)) {
            const Mat3T<S> &r = body_rot(k, b);
            const Mat3T<S> world_inertia = r * inertia->cast<S>() * r.transpose();
            const Mat3XT<S> jw = angular_jacobian<S>(model, k, b);
            m.noalias() += jw.transpose() * world_inertia * jw;
        }
    }
    return m;
}

/// M(q) v without forming M.
template <typename S>
VecXT<S> mass_times(const SystemModel &model, const VecXT<S> &q, const Eigen::VectorXd &v) {
    const Kinematics<S> k = forward_kinematics<S>(model, q);
    const VecXT<S> vs = v.cast<S>();
    VecXT<S> out = VecXT<S>::Zero(model.dof());
    for (int b = 0; b < body_count(model); ++b) {
        const Mat3XT<S> jv = linear_jacobian<S>(model, k, b, body_com(k, b));
        out.noalias() += S(body_mass(model, b)) * (jv.transpose() * (jv * vs));
        if (const Mat3 *inertia = body_inertia(model, b)) {
            const Mat3T<S> &r = body_rot(k, b);
            const Mat3XT<S> jw = angular_jacobian<S>(model, k, b);
            out.noalias() += jw.transpose() * (r * (inertia->cast<S>() * (r.transpose() * (jw * vs))));
        }
    }
    return out;
}

template <typename S>
Eigen::Matrix<S, 2, Eigen::Dynamic> com_jacobian(const SystemModel &model, const VecXT<S> &q) {
    const Kinematics<S> k = forward_kinematics<S>(model, q);
    Mat3XT<S> acc = Mat3XT<S>::Zero(3, model.dof());
    for (int b = 0; b < body_count(model); ++b)
        acc += S(body_mass(model, b)) * linear_jacobian<S>(model, k, b, body_com(k, b));
    return acc.topRows(2) / S(model.total_mass());
}

} // namespace pendusim::detail

namespace pendusim::detail {

struct MassAndBias {
    MatXT<double> M;
    MatXT<double> Mdot; ///< dM/dt along qd
    VecXT<double> h;    ///< Coriolis/centrifugal vector C(q, qd) qd
};

/// One dual pass seeded along qd: M, its rate, and the velocity-product
/// forces sum_b J^T (m Jdot qd) + Jw^T (I Jwdot qd + w x I w).
inline MassAndBias mass_and_bias(const SystemModel &model, const Eigen::VectorXd &q,
                                 const Eigen::VectorXd &qd) {
    const int nq = model.dof();
    VecXT<Dual> qq(nq);
    for (int i = 0; i < nq; ++i)
        qq[i] = Dual(q[i], qd[i]);
    const Kinematics<Dual> k = forward_kinematics<Dual>(model, qq);
    const VecXT<double> v = qd;
    const auto val = [](const Dual &x) { return x.v; };
    const auto der = [](const Dual &x) { return x.d; };

    MassAndBias out;
    out.M = MatXT<double>::Zero(nq, nq);
    out.Mdot = MatXT<double>::Zero(nq, nq);
    out.h = VecXT<double>::Zero(nq);
    for (int b = 0; b < body_count(model); ++b) {
        const double m = body_mass(model, b);
        const Mat3XT<Dual> jv_dual = linear_jacobian<Dual>(model, k, b, body_com(k, b));
        const Mat3XT<double> jv = jv_dual.unaryExpr(val);
        const Mat3XT<double> jv_dot = jv_dual.unaryExpr(der);
        const MatXT<double> jtj_dot = jv_dot.transpose() * jv;
        out.M.noalias() += m * (jv.transpose() * jv);
        out.Mdot += m * (jtj_dot + jtj_dot.transpose());
        out.h.noalias() += m * (jv.transpose() * (jv_dot * v));
        if (const Mat3 *inertia = body_inertia(model, b)) {
            const Mat3T<Dual> &r_dual = body_rot(k, b);
            const Mat3 r = r_dual.unaryExpr(val);
            const Mat3 r_dot = r_dual.unaryExpr(der);
            const Mat3 iw = r * *inertia * r.transpose();
            const Mat3 iw_dot = r_dot * *inertia * r.transpose() + r * *inertia * r_dot.transpose();
            const Mat3XT<Dual> jw_dual = angular_jacobian<Dual>(model, k, b);
            const Mat3XT<double> jw = jw_dual.unaryExpr(val);
            const Mat3XT<double> jw_dot = jw_dual.unaryExpr(der);
            const Eigen::Vector3d w = jw * v;
            const MatXT<double> cross_term = jw_dot.transpose() * iw * jw;
            out.M.noalias() += jw.transpose() * iw * jw;
            out.Mdot += cross_term + cross_term.transpose() + jw.transpose() * iw_dot * jw;
            out.h.noalias() += jw.transpose() * (iw * (jw_dot * v) + w.cross(iw * w));
        }
    }
    return out;
}

} // namespace pendusim::detail
