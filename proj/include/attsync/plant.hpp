#pragma once

#include <span>

#include "attsync/so3.hpp"

namespace attsync {

/// Rigid body: attitude R_i (body to inertial), body rate w_i [rad/s] and
/// inertia J_i [kg m^2].
struct AgentState {
    Rotation r;
    Vec3 w = Vec3::Zero();
    Mat3 inertia = Mat3::Identity();
};

/// Relative attitude Rbar_k = R_tail^T R_head of an oriented edge and its
/// hybrid angle xi_k [rad].
struct EdgeState {
    Rotation rbar;
    double xi = 0.0;
};

/// Small-satellite inertia used when a scenario gives none.
inline Mat3 default_inertia()
{
    return Vec3(0.06, 0.08, 0.1).asDiagonal();
}

/// Throws std::invalid_argument unless `j` is symmetric (1e-12) and
/// positive definite.
void validate_inertia(const Mat3& j);

/// R [w]x
inline Mat3 attitude_rate(const Mat3& r, const Vec3& w)
{
    return r * hat(w);
}

/// J^-1 (-[w]x J w + tau)
Vec3 omega_rate(const Mat3& inertia, const Vec3& w, const Vec3& torque);

/// Same, with a precomputed inverse inertia.
inline Vec3 omega_rate_inv(const Mat3& inertia, const Mat3& inertia_inv, const Vec3& w, const Vec3& torque)
{
    return inertia_inv * (torque - w.cross(inertia * w));
}

/// R_tail^T R_head
Rotation edge_relative(const AgentState& head, const AgentState& tail);

/// sum_i w_i^T J_i w_i
double kinetic_energy_sum(std::span<const AgentState> states);

}  // namespace attsync
