#pragma once

// Partial feedback linearization of the actuated output y = (yaw, movers,
// joints) and the mover reference-acceleration laws that shape the
// unactuated roll/pitch (or CoM) dynamics.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "pendusim/dynamics.hpp"
#include "pendusim/model.hpp"

namespace pendusim {

/// Controller gains. Matrix gains are diagonal and stored as their diagonals.
struct Gains {
    double D_gamma{10.0};
    double K_gamma{25.0};
    VectorXd D_r; ///< n
    VectorXd K_r; ///< n
    Vec2 D{Vec2::Constant(5.0)};
    Vec2 D_c{Vec2::Constant(400.0)};
    Vec2 K_c{Vec2::Constant(400.0)};
    Vec2 D_m{Vec2::Constant(0.2)};
    Vec2 K_m{Vec2::Constant(0.05)};
    Vec2 D_phi{Vec2::Constant(1000.0)};
    Vec2 K_phi{Vec2::Constant(434.0)};

    /// Tuned defaults for the preset models (see README).
    static Gains defaults(int link_count);

    /// Throws InvalidConfig unless every gain is positive and sized for n links.
    void validate(int link_count) const;

    /// min(D_c, K_c) >= 10 max(D_m, K_m), the ordering the CoM law relies on.
    bool satisfies_ordering() const;
};

struct Setpoint {
    double gamma_des{0.0};
    VectorXd q_r_des;
    Vec2 q_m_star{Vec2::Zero()};
};

/// u = (tau_yaw, tau_m, tau_r); the generalized force is tau = B u.
struct ControlInput {
    double tau_yaw{0.0};
    Vec2 tau_m{Vec2::Zero()};
    VectorXd tau_r;

    static ControlInput from_stacked(const VectorXd &u);
    VectorXd stacked() const;
    VectorXd generalized() const;
};

struct OuterRefs {
    double yaw_dd{0.0};
    VectorXd joints_dd;
};

/// PD references for yaw and the arm joints.
OuterRefs outer_refs(const State &state, const Setpoint &setpoint, const Gains &gains);

/// Stack (yaw_dd, mover_dd, joints_dd) into the output reference y_dd.
VectorXd output_reference(const OuterRefs &outer, const Vec2 &mover_dd);

/// Cancel gravity and coupling through the movers so roll/pitch follow a PD
/// law. Needs terms.C_pm (CoriolisDetail::attitude_coupling or matrix).
Vec2 qm_ref_motivating(const State &state, const DynamicsTerms &terms, const Gains &gains);

/// CoM feedback only, with no mover terms.
Vec2 qm_ref_remark1(const State &state, const TransformedTerms &transformed, const Gains &gains);

/// The attitude law plus a PD pull of the movers toward q_m_star.
Vec2 qm_ref_remark2(const State &state, const DynamicsTerms &terms, const Setpoint &setpoint,
                    const Gains &gains);

/// CoM feedback through Mbar_cm^T plus a PD pull toward q_m_star, all scaled by D.
Vec2 qm_ref_proposed(const State &state, const TransformedTerms &transformed,
                     const Setpoint &setpoint, const Gains &gains);

/// u = (B^T M^-1 B)^-1 (B^T M^-1 (C qd + g) + y_dd_ref)
ControlInput pfl_input_standard(const DynamicsTerms &terms, const VectorXd &y_dd_ref);

/// The same law written with the CoM-coordinate terms.
ControlInput pfl_input_transformed(const DynamicsTerms &terms, const TransformedTerms &transformed,
                                   const VectorXd &y_dd_ref);

/// g_phi with the platform level (roll = pitch = yaw = 0).
Vec2 level_attitude_gravity(const SystemModel &model, const Vec2 &q_m, const VectorXd &q_r);

struct EquilibriumOptions {
    int max_iterations{100};
    double tolerance{1e-12};
    /// Accepted instead when roundoff stalls the iteration above `tolerance`.
    double accept_tolerance{1e-10};
    double fd_step{1e-6};
    /// Keep iterates inside the mover travel box; a balance point outside it
    /// is reported as NoConvergence.
    bool respect_travel_limit{true};
};

struct EquilibriumResult {
    Vec2 q_m;
    double residual{0.0};
    int iterations{0};
};

/// Damped Newton on g_phi(level, q_m, q_r_des) = 0 from q_m = 0.
EquilibriumResult solve_equilibrium_qm(const SystemModel &model, const VectorXd &q_r_des,
                                       const EquilibriumOptions &options = {});

enum class ControllerKind { free, hold, motivating, remark1, remark2, proposed };

std::string to_string(ControllerKind kind);
ControllerKind controller_from_string(const std::string &name);

struct ControlOutput {
    ControlInput u;
    Vec2 mover_dd_ref{Vec2::Zero()};
    DynamicsTerms terms; ///< the evaluation the input was built from; empty for `free`
};

/// Full control input for one controller at one state. `hold` linearizes with
/// a zero output reference (every actuated coordinate keeps its rate).
ControlOutput compute_control(ControllerKind kind, const SystemModel &model, const State &state,
                              const Setpoint &setpoint, const Gains &gains);

/// A stationary point of the closed loop with yaw and joints at their targets.
struct RestPoint {
    Vec2 phi;
    Vec2 q_m;
    Vec2 xc;
    double residual{0.0};
};

/// Newton from each seed (phi, q_m) on [g_phi; mover_dd_ref] = 0 at zero
/// rates. Roots closer than `merge_tol` are merged.
std::vector<RestPoint> find_rest_points(ControllerKind kind, const SystemModel &model,
                                        const Setpoint &setpoint, const Gains &gains,
                                        const std::vector<Eigen::Vector4d> &seeds,
                                        double merge_tol = 1e-6);

} // namespace pendusim
