#include "pendusim/model.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "kinematics.hpp"

namespace pendusim {

namespace {

/// Slender cylinder of length `length` along its local z axis.
Mat3 rod_inertia(double mass, double length, double radius = 0.04) {
    const double transverse = mass * (3.0 * radius * radius + length * length) / 12.0;
    const double axial = 0.5 * mass * radius * radius;
    return Eigen::Vector3d(transverse, transverse, axial).asDiagonal();
}

SerialLink rod_link(double parent_length, const Vec3 &axis, double mass, double length) {
    SerialLink link;
    link.parent_offset = Vec3(0.0, 0.0, parent_length);
    link.axis = axis;
    link.mass = mass;
    link.com_offset = Vec3(0.0, 0.0, 0.5 * length);
    link.inertia = rod_inertia(mass, length);
    return link;
}

void check_inertia(const Mat3 &inertia, bool strictly_positive, const std::string &who) {
    if (!inertia.allFinite())
        throw InvalidConfig(who + ": inertia has non-finite entries");
    if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + inertia.norm()))
        throw InvalidConfig(who + ": inertia is not symmetric");
    const double lowest = Eigen::SelfAdjointEigenSolver<Mat3>(inertia).eigenvalues().minCoeff();
    if (strictly_positive ? !(lowest > 0.0) : lowest < -1e-12)
        throw InvalidConfig(who + ": inertia is not positive " +
                            (strictly_positive ? "definite" : "semidefinite"));
}

int body_index(const SystemModel &model, const BodyId &body) {
    switch (body.kind) {
    case BodyId::Kind::platform:
        return 0;
    case BodyId::Kind::mover:
        if (body.index == 1 || body.index == 2)
            return body.index;
        break;
    case BodyId::Kind::link:
    case BodyId::Kind::link_com:
        if (body.index >= 1 && body.index <= model.link_count())
            return 2 + body.index;
        break;
    }
    throw InvalidBody("no such body: " + to_string(body));
}

struct Frame {
    Vec3 origin;
    Mat3 rot;
};

Frame body_frame(const SystemModel &model, const detail::Kinematics<double> &k,
                 const BodyId &body) {
    const int b = body_index(model, body);
    switch (body.kind) {
    case BodyId::Kind::platform:
        return {k.platform_center, k.platform_rot};
    case BodyId::Kind::mover:
        return {k.mover_pos[b - 1], k.platform_rot};
    case BodyId::Kind::link:
        return {k.joint_origin[b - 3], k.link_rot[b - 3]};
    case BodyId::Kind::link_com:
        return {k.link_com[b - 3], k.link_rot[b - 3]};
    }
    return {};
}

} // namespace

double SystemModel::arm_mass() const {
    return std::accumulate(links.begin(), links.end(), 0.0,
                           [](double acc, const SerialLink &l) { return acc + l.mass; });
}

double SystemModel::total_mass() const { return platform.mass + 2.0 * movers.mass + arm_mass(); }

void SystemModel::validate() const {
    if (!(platform.mass > 0.0) || !std::isfinite(platform.mass))
        throw InvalidConfig("platform mass must be positive");
    check_inertia(platform.inertia, true, "platform");
    if (!(platform.wire_length > 0.0) || !std::isfinite(platform.wire_length))
        throw InvalidConfig("wire length must be positive");
    if (!std::isfinite(platform.rail_height) || !platform.mount_offset.allFinite())
        throw InvalidConfig("platform geometry must be finite");
    if (!(movers.mass > 0.0) || !std::isfinite(movers.mass))
        throw InvalidConfig("mover mass must be positive");
    if (!(movers.travel_limit > 0.0))
        throw InvalidConfig("mover travel limit must be positive");
    if (!(gravity >= 0.0) || !std::isfinite(gravity))
        throw InvalidConfig("gravity must be finite and non-negative");
    if (link_count() > kMaxLinks)
        throw InvalidConfig("at most " + std::to_string(kMaxLinks) + " links are supported");
    for (int k = 0; k < link_count(); ++k) {
        const SerialLink &l = links[k];
        const std::string who = "link " + std::to_string(k + 1);
        if (!(l.mass >= 0.0) || !std::isfinite(l.mass))
            throw InvalidConfig(who + ": mass must be non-negative");
        if (std::abs(l.axis.norm() - 1.0) > 1e-12)
            throw InvalidConfig(who + ": joint axis must be unit norm");
        if (!l.parent_offset.allFinite() || !l.com_offset.allFinite())
            throw InvalidConfig(who + ": offsets must be finite");
        check_inertia(l.inertia, false, who);
    }
}

State State::zero(const SystemModel &model) {
    return {0.0, VectorXd::Zero(model.dof()), VectorXd::Zero(model.dof())};
}

void check_state(const SystemModel &model, const VectorXd &q, const VectorXd &qd) {
    if (q.size() != model.dof() || qd.size() != model.dof())
        throw InvalidConfig("state size does not match model DoF " + std::to_string(model.dof()));
    if (!q.allFinite() || !qd.allFinite())
        throw InvalidConfig("state has non-finite entries");
    if (!(std::abs(q[dof::pitch]) < kGimbalLimit))
        throw GimbalLock("pitch at or beyond the gimbal-lock guard");
}

SystemModel preset_paper(int n) {
    SystemModel model;
    model.platform.mass = 10.0;
    // uniform 1.0 x 1.0 x 0.1 m box
    model.platform.inertia =
        Eigen::Vector3d(10.0 * (1.0 + 0.01) / 12.0, 10.0 * (1.0 + 0.01) / 12.0, 10.0 * 2.0 / 12.0)
            .asDiagonal();
    model.platform.wire_length = 10.0;
    model.platform.rail_height = 0.05;
    model.platform.mount_offset = Vec3(0.0, 0.0, 0.05);
    model.movers.mass = 10.0;
    model.movers.travel_limit = 0.8;
    model.gravity = 9.81;

    // Joint 1 turns about the platform's downward normal; this orients the
    // arm so the static balance needs one negative and one positive mover.
    const Vec3 z_axis(0.0, 0.0, -1.0);
    const Vec3 y_axis = Vec3::UnitY();
    if (n == 3) {
        const double mass[] = {7.0, 5.0, 3.0};
        const double length[] = {0.4, 0.3, 0.2};
        const Vec3 axis[] = {z_axis, y_axis, y_axis};
        for (int k = 0; k < 3; ++k)
            model.links.push_back(rod_link(k == 0 ? 0.0 : length[k - 1], axis[k], mass[k], length[k]));
    } else if (n == 7) {
        const double mass[] = {3.0, 3.0, 2.5, 2.0, 2.0, 1.5, 1.0};
        const double length[] = {0.2, 0.26, 0.22, 0.18, 0.13, 0.09, 0.07};
        const Vec3 axis[] = {z_axis, y_axis, y_axis, z_axis, y_axis, z_axis, y_axis};
        for (int k = 0; k < 7; ++k)
            model.links.push_back(rod_link(k == 0 ? 0.0 : length[k - 1], axis[k], mass[k], length[k]));
    } else {
        throw UnsupportedPreset("preset_paper supports 3 or 7 links, got " + std::to_string(n));
    }
    return model;
}

std::string to_string(const BodyId &body) {
    switch (body.kind) {
    case BodyId::Kind::platform:
        return "platform";
    case BodyId::Kind::mover:
        return "mover(" + std::to_string(body.index) + ")";
    case BodyId::Kind::link:
        return "link(" + std::to_string(body.index) + ")";
    case BodyId::Kind::link_com:
        return "link_com(" + std::to_string(body.index) + ")";
    }
    return "?";
}

Vec3 body_position(const SystemModel &model, const VectorXd &q, BodyId body) {
    body_index(model, body);
    return body_frame(model, detail::forward_kinematics<double>(model, q), body).origin;
}

Rotation3 body_rotation(const SystemModel &model, const VectorXd &q, BodyId body) {
    body_index(model, body);
    return body_frame(model, detail::forward_kinematics<double>(model, q), body).rot;
}

Matrix3X point_jacobian(const SystemModel &model, const VectorXd &q, BodyId body,
                        const Vec3 &local_point) {
    const int b = body_index(model, body);
    const auto k = detail::forward_kinematics<double>(model, q);
    const Frame f = body_frame(model, k, body);
    return detail::linear_jacobian<double>(model, k, b, f.origin + f.rot * local_point);
}

Vec2 com_xy(const SystemModel &model, const VectorXd &q) {
    const auto k = detail::forward_kinematics<double>(model, q);
    Vec3 acc = Vec3::Zero();
    for (int b = 0; b < detail::body_count(model); ++b)
        acc += detail::body_mass(model, b) * detail::body_com(k, b);
    return acc.head<2>() / model.total_mass();
}

Matrix2X com_jacobian(const SystemModel &model, const VectorXd &q) {
    return detail::com_jacobian<double>(model, q);
}

} // namespace pendusim
