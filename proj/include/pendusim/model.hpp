#pragma once

// Physical description of the suspended platform: a rigid massless rod of
// length L from a fixed pivot at the world origin to the platform center,
// two point-mass movers on rails along the platform x and y axes, and a
// serial chain of revolute links mounted on the platform.
//
// Generalized coordinates (N = 5 + n):
//   q = (roll, pitch, yaw, mover1, mover2, joint1 .. jointn)

#include <string>
#include <vector>

#include <Eigen/Core>

#include "pendusim/spatial.hpp"

namespace pendusim {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Matrix3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;
using Matrix2X = Eigen::Matrix<double, 2, Eigen::Dynamic>;

/// Indices into q.
namespace dof {
inline constexpr int roll = 0;
inline constexpr int pitch = 1;
inline constexpr int yaw = 2;
inline constexpr int mover1 = 3;
inline constexpr int mover2 = 4;
inline constexpr int arm = 5; ///< first manipulator joint
} // namespace dof

/// Upper bound on manipulator links.
inline constexpr int kMaxLinks = 10;

struct PlatformParams {
    double mass{10.0};
    Mat3 inertia{Mat3::Identity()}; ///< about the platform CoM, platform frame
    double wire_length{10.0};
    double rail_height{0.05}; ///< mover rails above the platform center
    Vec3 mount_offset{0.0, 0.0, 0.05};
};

/// Mover 1 travels along platform x, mover 2 along platform y.
struct MoverParams {
    double mass{10.0};
    double travel_limit{0.8}; ///< soft limit, only reported
};

/// One revolute link. The joint sits at parent_offset in the parent frame and
/// rotates about `axis`; com_offset and inertia are in the link's own frame.
struct SerialLink {
    Vec3 parent_offset{Vec3::Zero()};
    Vec3 axis{Vec3::UnitZ()};
    double mass{0.0};
    Vec3 com_offset{Vec3::Zero()};
    Mat3 inertia{Mat3::Zero()};
};

struct SystemModel {
    PlatformParams platform;
    MoverParams movers;
    std::vector<SerialLink> links;
    double gravity{9.81};

    int link_count() const { return static_cast<int>(links.size()); }
    int dof() const { return 5 + link_count(); }
    int input_count() const { return 3 + link_count(); }
    double arm_mass() const;
    double total_mass() const;

    /// Throws InvalidConfig on a violated invariant.
    void validate() const;
};

struct State {
    double t{0.0};
    VectorXd q;
    VectorXd qd;

    static State zero(const SystemModel &model);
};

/// Throws InvalidConfig for wrong sizes or non-finite entries and GimbalLock
/// when |pitch| is at the guard.
void check_state(const SystemModel &model, const VectorXd &q, const VectorXd &qd);

/// Model with the published masses (L = 10 m, movers 10 kg each, platform
/// 10 kg, arm 15 kg). n = 3 is the desk-scale arm, n = 7 the full-size one.
SystemModel preset_paper(int n);

struct BodyId {
    enum class Kind { platform, mover, link, link_com };
    Kind kind{Kind::platform};
    int index{0}; ///< mover 1..2, link 1..n

    static BodyId platform() { return {Kind::platform, 0}; }
    static BodyId mover(int i) { return {Kind::mover, i}; }
    static BodyId link(int k) { return {Kind::link, k}; }
    static BodyId link_com(int k) { return {Kind::link_com, k}; }
};

std::string to_string(const BodyId &body);

/// World position of the body's reference point (platform center, mover,
/// joint-k frame origin, or link-k CoM).
Vec3 body_position(const SystemModel &model, const VectorXd &q, BodyId body);

/// World orientation of the body frame.
Rotation3 body_rotation(const SystemModel &model, const VectorXd &q, BodyId body);

/// Jacobian of the world position of `local_point` (expressed in the body
/// frame, relative to the body reference point) with respect to q.
Matrix3X point_jacobian(const SystemModel &model, const VectorXd &q, BodyId body,
                        const Vec3 &local_point = Vec3::Zero());

/// World x, y of the overall center of mass.
Vec2 com_xy(const SystemModel &model, const VectorXd &q);
Matrix2X com_jacobian(const SystemModel &model, const VectorXd &q);

} // namespace pendusim
