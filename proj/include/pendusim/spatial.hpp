#pragma once

// Rotations and Euler-angle rate maps for the platform attitude.
//
// Convention: extrinsic X (roll), then Y (pitch), then Z (yaw), i.e.
//   R = Rz(yaw) * Ry(pitch) * Rx(roll).
// All functions are templates so the kinematics can be evaluated with
// dual numbers; the double instantiations are the public API.

#include <cmath>

#include <Eigen/Core>

#include "pendusim/dual.hpp"
#include "pendusim/errors.hpp"

namespace pendusim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Rotation3 = Eigen::Matrix3d;
using EulerRateMap = Eigen::Matrix3d;

template <typename S> using Vec3T = Eigen::Matrix<S, 3, 1>;
template <typename S> using Mat3T = Eigen::Matrix<S, 3, 3>;

/// Pitch magnitude at which the roll/yaw axes become parallel.
inline constexpr double kGimbalLimit = M_PI / 2.0 - 1e-6;

template <typename S> Mat3T<S> rot_x(const S &a) {
    using std::cos;
    using std::sin;
    const S c = cos(a), s = sin(a);
    Mat3T<S> r;
    r << S(1), S(0), S(0), S(0), c, -s, S(0), s, c;
    return r;
}

template <typename S> Mat3T<S> rot_y(const S &a) {
    using std::cos;
    using std::sin;
    const S c = cos(a), s = sin(a);
    Mat3T<S> r;
    r << c, S(0), s, S(0), S(1), S(0), -s, S(0), c;
    return r;
}

template <typename S> Mat3T<S> rot_z(const S &a) {
    using std::cos;
    using std::sin;
    const S c = cos(a), s = sin(a);
    Mat3T<S> r;
    r << c, -s, S(0), s, c, S(0), S(0), S(0), S(1);
    return r;
}

template <typename S> Mat3T<S> rot_rpy(const S &roll, const S &pitch, const S &yaw) {
    return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

/// World-frame angular velocity map: omega = E * (roll_dot, pitch_dot, yaw_dot).
///
/// Columns are the world directions of the three rotation axes:
/// Rz Ry e_x, Rz e_y and e_z. Throws GimbalLock when |pitch| reaches the guard.
template <typename S> Mat3T<S> euler_rate_map(const S &roll, const S &pitch, const S &yaw) {
    (void)roll;
    if (!(std::abs(value_of(pitch)) < kGimbalLimit))
        throw GimbalLock("euler_rate_map: |pitch| at or beyond the gimbal-lock guard");
    const Mat3T<S> rz = rot_z(yaw);
    const Mat3T<S> rzy = rz * rot_y(pitch);
    Mat3T<S> e;
    e.col(0) = rzy.col(0);
    e.col(1) = rz.col(1);
    e.col(2) << S(0), S(0), S(1);
    return e;
}

inline EulerRateMap euler_rate_map(double roll, double pitch) {
    return euler_rate_map<double>(roll, pitch, 0.0);
}

/// Rotation by `angle` about the unit vector `axis` (Rodrigues).
template <typename S> Mat3T<S> axis_angle(const Vec3 &axis, const S &angle) {
    using std::cos;
    using std::sin;
    const Mat3T<S> k = (Mat3T<S>() << S(0), S(-axis.z()), S(axis.y()), S(axis.z()), S(0),
                        S(-axis.x()), S(-axis.y()), S(axis.x()), S(0))
                           .finished();
    return Mat3T<S>::Identity() + sin(angle) * k + (S(1) - cos(angle)) * (k * k);
}

inline Mat3 skew(const Vec3 &v) {
    Mat3 k;
    k << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return k;
}

/// Vector of the skew-symmetric part of m.
inline Vec3 unskew(const Mat3 &m) {
    return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

} // namespace pendusim
