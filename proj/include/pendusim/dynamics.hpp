#pragma once

// Equation of motion  M(q) qdd + C(q, qd) qd + g(q) = tau  and its
// reparametrization in center-of-mass coordinates
//   qbar_dot = T qd,   qbar = (x_c, yaw, movers, joints).

#include <limits>

#include <Eigen/Core>

#include "pendusim/model.hpp"

namespace pendusim {

/// How much of the Coriolis term an evaluation produces. The full Christoffel
/// matrix costs one dual mass-matrix pass per coordinate; the vector C qd
/// costs one pass; the roll/pitch-by-mover block adds three mover-only passes.
enum class CoriolisDetail { matrix, vector, attitude_coupling };

struct DynamicsTerms {
    MatrixXd M;
    MatrixXd C; ///< empty unless evaluated with CoriolisDetail::matrix
    VectorXd g;
    VectorXd h; ///< C qd
    Mat2 C_pm{Mat2::Constant(std::numeric_limits<double>::quiet_NaN())};
    VectorXd q;
    VectorXd qd;

    bool has_coriolis_matrix() const { return C.size() > 0; }
};

struct TransformedTerms {
    MatrixXd T;
    MatrixXd Tdot;
    MatrixXd T_inv;
    MatrixXd Mbar;
    MatrixXd Cbar; ///< empty unless the source terms carry the full C
    VectorXd gbar;
    VectorXd cbar_qbar_dot; ///< Cbar qbar_dot, always available
    VectorXd qbar_dot; ///< T qd
    Vec2 xc;           ///< CoM x, y (world)
    double condition{1.0};
};

/// Roll/pitch rows of the original terms (phi = roll, pitch; m = movers).
struct AttitudeBlocks {
    Mat2 M_pp, M_pm, C_pp, C_pm;
    Vec2 g_p;
};

/// CoM rows of the transformed terms (c = CoM x, y; m = movers).
struct ComBlocks {
    Mat2 M_cc, M_cm, C_cc, C_cm;
    Vec2 g_c;
};

/// Condition-number ceiling for T.
inline constexpr double kMaxTransformCondition = 1e8;

MatrixXd mass_matrix(const SystemModel &model, const VectorXd &q);

/// dV/dq with V = sum m g0 z.
VectorXd gravity_vector(const SystemModel &model, const VectorXd &q);

/// Christoffel-symbol Coriolis matrix; the mass-matrix partials are exact
/// (forward-mode dual numbers).
MatrixXd coriolis_matrix(const SystemModel &model, const VectorXd &q, const VectorXd &qd);

/// C qd from a single dual pass (Jacobian bias accelerations projected by J^T).
VectorXd coriolis_vector(const SystemModel &model, const VectorXd &q, const VectorXd &qd);

/// Christoffel entries of C in the roll/pitch rows and mover columns.
Mat2 coriolis_attitude_mover_block(const SystemModel &model, const VectorXd &q,
                                   const VectorXd &qd);

DynamicsTerms evaluate(const SystemModel &model, const VectorXd &q, const VectorXd &qd,
                       CoriolisDetail detail = CoriolisDetail::matrix);

/// qdd = M^-1 (tau - C qd - g). Throws SingularMass if the Cholesky solve fails.
VectorXd forward_dynamics(const DynamicsTerms &terms, const VectorXd &tau);
VectorXd forward_dynamics(const SystemModel &model, const VectorXd &q, const VectorXd &qd,
                          const VectorXd &tau);

/// CoM transform: T = [com_jacobian; unit rows for yaw, movers, joints].
MatrixXd com_transform(const SystemModel &model, const VectorXd &q);

/// Throws IllConditionedTransform when cond(T) exceeds kMaxTransformCondition.
TransformedTerms transform(const SystemModel &model, const DynamicsTerms &terms);
TransformedTerms transform(const SystemModel &model, const VectorXd &q, const VectorXd &qd);

/// Transformed forward dynamics: qbar_dd = Mbar^-1 (T^-T tau - Cbar qbar_dot - gbar).
VectorXd transformed_forward_dynamics(const TransformedTerms &terms, const VectorXd &tau);

/// Selection matrix B = [0_{2 x (N-2)}; I_{N-2}].
MatrixXd actuation_map(int dof);

/// Require terms evaluated with the full Coriolis matrix (InvalidConfig otherwise).
AttitudeBlocks blocks(const DynamicsTerms &terms);
ComBlocks blocks(const TransformedTerms &terms);

double kinetic_energy(const SystemModel &model, const VectorXd &q, const VectorXd &qd);
double potential_energy(const SystemModel &model, const VectorXd &q);

} // namespace pendusim
