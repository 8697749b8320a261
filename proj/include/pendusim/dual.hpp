#pragma once

// Forward-mode dual numbers: value plus one directional derivative.
// Used to differentiate the templated kinematics exactly (mass-matrix
// partials for the Christoffel symbols, and the rate of the CoM transform).

#include <cmath>

#include <Eigen/Core>

namespace pendusim {

struct Dual {
    double v{0.0};
    double d{0.0};

    constexpr Dual() = default;
    constexpr Dual(double value) : v(value) {} // NOLINT(google-explicit-constructor)
    constexpr Dual(double value, double deriv) : v(value), d(deriv) {}

    Dual &operator+=(const Dual &o) {
        v += o.v;
        d += o.d;
        return *this;
    }
    Dual &operator-=(const Dual &o) {
        v -= o.v;
        d -= o.d;
        return *this;
    }
    Dual &operator*=(const Dual &o) {
        d = d * o.v + v * o.d;
        v *= o.v;
        return *this;
    }
    Dual &operator/=(const Dual &o) {
        d = (d * o.v - v * o.d) / (o.v * o.v);
        v /= o.v;
        return *this;
    }
};

inline Dual operator+(Dual a, const Dual &b) { return a += b; }
inline Dual operator-(Dual a, const Dual &b) { return a -= b; }
inline Dual operator*(Dual a, const Dual &b) { return a *= b; }
inline Dual operator/(Dual a, const Dual &b) { return a /= b; }
inline Dual operator-(const Dual &a) { return {-a.v, -a.d}; }
inline Dual operator+(const Dual &a) { return a; }

inline bool operator<(const Dual &a, const Dual &b) { return a.v < b.v; }
inline bool operator>(const Dual &a, const Dual &b) { return a.v > b.v; }
inline bool operator<=(const Dual &a, const Dual &b) { return a.v <= b.v; }
inline bool operator>=(const Dual &a, const Dual &b) { return a.v >= b.v; }
inline bool operator==(const Dual &a, const Dual &b) { return a.v == b.v && a.d == b.d; }
inline bool operator!=(const Dual &a, const Dual &b) { return !(a == b); }

inline Dual sin(const Dual &a) { return {std::sin(a.v), a.d * std::cos(a.v)}; }
inline Dual cos(const Dual &a) { return {std::cos(a.v), -a.d * std::sin(a.v)}; }
inline Dual sqrt(const Dual &a) {
    const double s = std::sqrt(a.v);
    return {s, s > 0.0 ? a.d / (2.0 * s) : 0.0};
}
inline Dual abs(const Dual &a) { return a.v < 0.0 ? -a : a; }
inline Dual abs2(const Dual &a) { return a * a; }
inline Dual conj(const Dual &a) { return a; }
inline Dual real(const Dual &a) { return a; }
inline Dual imag(const Dual &) { return 0.0; }

inline double value_of(double x) { return x; }
inline double value_of(const Dual &x) { return x.v; }

} // namespace pendusim

namespace Eigen {

template <> struct NumTraits<pendusim::Dual> : NumTraits<double> {
    using Real = pendusim::Dual;
    using NonInteger = pendusim::Dual;
    using Nested = pendusim::Dual;
    using Literal = pendusim::Dual;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 2,
        AddCost = 2,
        MulCost = 4
    };
};

} // namespace Eigen
