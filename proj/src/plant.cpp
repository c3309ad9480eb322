#include "attsync/plant.hpp"

#include <stdexcept>

#include "attsync/potential.hpp"

namespace attsync {

void validate_inertia(const Mat3& j)
{
    if (!j.allFinite() || (j - j.transpose()).norm() > 1e-12) {
        throw std::invalid_argument("inertia must be symmetric");
    }
    if (!(jacobi_eigen(j).values[0] > 0.0)) {
        throw std::invalid_argument("inertia must be positive definite");
    }
}

Vec3 omega_rate(const Mat3& inertia, const Vec3& w, const Vec3& torque)
{
    return inertia.ldlt().solve(torque - w.cross(inertia * w));
}

Rotation edge_relative(const AgentState& head, const AgentState& tail)
{
    return tail.r.transpose() * head.r;
}

double kinetic_energy_sum(std::span<const AgentState> states)
{
    double sum = 0.0;
    for (const auto& s : states) {
        sum += s.w.dot(s.inertia * s.w);
    }
    return sum;
}

}  // namespace attsync
