#pragma once

#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "attsync/potential.hpp"
#include "attsync/so3.hpp"
#include "attsync/topology.hpp"

namespace attsync {

enum class ControllerKind { continuous, hybrid, velocity_free };

std::string_view to_string(ControllerKind kind);
/// Accepts "continuous", "hybrid" and "velocity-free".
ControllerKind parse_controller_kind(std::string_view name);

struct Gains {
    double k_r = 1.0;
    double k_w = 0.0;
    double k_w_bar = 0.0;
    double k_xi = 0.0;
    double k_q = 0.0;
    double k_qtilde = 0.0;
    double k_zeta = 0.0;

    bool operator==(const Gains&) const = default;
};

/// Throws std::invalid_argument when the gains do not meet the requirements
/// of `kind`. k_w == 0 is only accepted with `time_varying_consensus`.
void validate_gains(const Gains& g, ControllerKind kind, bool time_varying_consensus);

/// Auxiliary attitude Q_i and angle zeta_i of the velocity-free law.
struct AuxState {
    Rotation q;
    double zeta = 0.0;
};

// All torque laws below read relative attitudes from the edge rotations
// Rbar_k = R_tail^T R_head and accept near-rotations (Runge-Kutta stage
// values), so they take raw matrices.

/// -k_R sum_{j in N_i} psi(A R_j^T R_i) - k_w w_i - k_w_bar sum_j (w_i - w_j)
Vec3 continuous_torque(int i, const OrientedTree& tree, std::span<const Mat3> rbar, std::span<const Vec3> w,
                       const Gains& g, const PotentialParams& p);

/// Distributed hybrid law with angular-velocity feedback. Over neighbors j
/// that head the shared edge n the gradient term is psi(A Ra(xi_n)^T R_j^T R_i);
/// over neighbors that are its tail (edge p) it is
/// Ra(xi_p) psi(A R_j^T R_i Ra(xi_p)).
Vec3 hybrid_torque(int i, const OrientedTree& tree, std::span<const Mat3> rbar, std::span<const double> xi,
                   std::span<const Vec3> w, const Gains& g, const PotentialParams& p);

/// -k_xi dU/dxi at (Rbar_k, xi_k).
double xi_flow(const Mat3& rbar, double xi, const Gains& g, const PotentialParams& p);

/// Reset value xi_star(Rbar_k). Throws std::logic_error when gap < delta.
double xi_jump(const Mat3& rbar, double xi, const PotentialParams& p);

struct AuxRate {
    Mat3 q_dot;
    double zeta_dot;
};

/// Q' = k_Q Q [Qt Ra(zeta) psi(A Qt Ra(zeta))]x, zeta' = -k_zeta dU/dzeta at
/// (Qt, zeta), with Qt = Q^T R.
AuxRate aux_flow(const Mat3& r, const Mat3& q, double zeta, const Gains& g, const PotentialParams& aux_p);

/// argmin of U(Qt, .) over the auxiliary switching set; Q is left unchanged
/// by the jump. Throws std::logic_error when the auxiliary gap is below
/// its threshold.
double aux_jump(const Mat3& r, const Mat3& q, double zeta, const PotentialParams& aux_p);

/// Velocity-free hybrid law. Takes attitudes and auxiliary states only;
/// there is deliberately no angular-velocity argument.
Vec3 vf_torque(int i, const OrientedTree& tree, std::span<const Mat3> r, std::span<const Mat3> rbar,
               std::span<const double> xi, std::span<const Mat3> q, std::span<const double> zeta, const Gains& g,
               const PotentialParams& edge_p, const PotentialParams& aux_p);

/// Optional relative damping -k_w_bar sum_{j in N_i} (d_i - d_j) built from
/// the auxiliary outputs d_i = Ra(zeta_i) psi(A Qt_i Ra(zeta_i)). Returns zero
/// unless `enabled`. No stability guarantee comes with this term.
Vec3 experimental_relative_aux_damping(int i, const OrientedTree& tree, std::span<const Mat3> r,
                                       std::span<const Mat3> q, std::span<const double> zeta, const Gains& g,
                                       const PotentialParams& aux_p, bool enabled);

/// Psi = [psi(Ra(xi_k) A Rbar_k)]_k, the stacked edge gradients (3M).
Eigen::VectorXd stacked_edge_gradients(std::span<const Mat3> rbar, std::span<const double> xi,
                                       const PotentialParams& p);

/// Matrix assembly -k_R Hbar Psi - k_w w - k_w_bar (L x I3) w of the hybrid
/// torques for every agent (3N). Independent of hybrid_torque().
Eigen::VectorXd stacked_hybrid_torque(const OrientedTree& tree, std::span<const Mat3> rbar,
                                      std::span<const double> xi, std::span<const Vec3> w, const Gains& g,
                                      const PotentialParams& p);

}  // namespace attsync
