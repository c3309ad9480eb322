#include "attsync/controllers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace attsync {

namespace {

bool positive(double x)
{
    return std::isfinite(x) && x > 0.0;
}

bool nonnegative(double x)
{
    return std::isfinite(x) && x >= 0.0;
}

Vec3 aux_output(const Mat3& r, const Mat3& q, double zeta, const PotentialParams& aux_p)
{
    const Mat3 ra = axis_angle_matrix(zeta, aux_p.u());
    return ra * psi(aux_p.a() * q.transpose() * r * ra);
}

Vec3 relative_damping(int i, const OrientedTree& tree, std::span<const Vec3> w)
{
    Vec3 sum = Vec3::Zero();
    for (int j : tree.neighbors(i)) {
        sum += w[static_cast<std::size_t>(i)] - w[static_cast<std::size_t>(j)];
    }
    return sum;
}

Vec3 hybrid_gradient_sum(int i, const OrientedTree& tree, std::span<const Mat3> rbar, std::span<const double> xi,
                         const PotentialParams& p)
{
    const Mat3& a = p.a();
    Vec3 sum = Vec3::Zero();
    for (const Incidence& inc : tree.incidences(i)) {
        const auto k = static_cast<std::size_t>(inc.edge);
        const Mat3 ra = axis_angle_matrix(xi[k], p.u());
        if (inc.is_head) {
            // neighbor is the tail: Rbar_k = R_j^T R_i
            sum += ra * psi(a * rbar[k] * ra);
        } else {
            // neighbor is the head: R_j^T R_i = Rbar_k^T
            sum += psi(a * ra.transpose() * rbar[k].transpose());
        }
    }
    return sum;
}

}  // namespace

std::string_view to_string(ControllerKind kind)
{
    switch (kind) {
    case ControllerKind::continuous:
        return "continuous";
    case ControllerKind::hybrid:
        return "hybrid";
    case ControllerKind::velocity_free:
        return "velocity-free";
    }
    return "unknown";
}

ControllerKind parse_controller_kind(std::string_view name)
{
    if (name == "continuous") {
        return ControllerKind::continuous;
    }
    if (name == "hybrid") {
        return ControllerKind::hybrid;
    }
    if (name == "velocity-free") {
        return ControllerKind::velocity_free;
    }
    throw std::invalid_argument("unknown controller '" + std::string(name) +
                                "' (expected continuous | hybrid | velocity-free)");
}

void validate_gains(const Gains& g, ControllerKind kind, bool time_varying_consensus)
{
    for (double x : {g.k_r, g.k_w, g.k_w_bar, g.k_xi, g.k_q, g.k_qtilde, g.k_zeta}) {
        if (!nonnegative(x)) {
            throw std::invalid_argument("gains must be finite and nonnegative");
        }
    }
    if (!positive(g.k_r)) {
        throw std::invalid_argument("k_r must be positive");
    }
    switch (kind) {
    case ControllerKind::continuous:
    case ControllerKind::hybrid:
        if (kind == ControllerKind::hybrid && !positive(g.k_xi)) {
            throw std::invalid_argument("hybrid law needs k_xi > 0");
        }
        if (!positive(g.k_w) && !time_varying_consensus) {
            throw std::invalid_argument("k_w must be positive unless time-varying consensus is requested");
        }
        if (time_varying_consensus && !positive(g.k_w_bar)) {
            throw std::invalid_argument("time-varying consensus needs k_w_bar > 0");
        }
        break;
    case ControllerKind::velocity_free:
        if (!positive(g.k_xi) || !positive(g.k_q) || !positive(g.k_qtilde) || !positive(g.k_zeta)) {
            throw std::invalid_argument("velocity-free law needs k_xi, k_q, k_qtilde, k_zeta > 0");
        }
        if (time_varying_consensus) {
            throw std::invalid_argument("time-varying consensus applies to velocity-feedback laws only");
        }
        break;
    }
}

Vec3 continuous_torque(int i, const OrientedTree& tree, std::span<const Mat3> rbar, std::span<const Vec3> w,
                       const Gains& g, const PotentialParams& p)
{
    Vec3 grad = Vec3::Zero();
    for (const Incidence& inc : tree.incidences(i)) {
        const Mat3& rk = rbar[static_cast<std::size_t>(inc.edge)];
        grad += psi(p.a() * (inc.is_head ? rk : Mat3(rk.transpose())));
    }
    return -g.k_r * grad - g.k_w * w[static_cast<std::size_t>(i)] - g.k_w_bar * relative_damping(i, tree, w);
}

Vec3 hybrid_torque(int i, const OrientedTree& tree, std::span<const Mat3> rbar, std::span<const double> xi,
                   std::span<const Vec3> w, const Gains& g, const PotentialParams& p)
{
    return -g.k_r * hybrid_gradient_sum(i, tree, rbar, xi, p) - g.k_w * w[static_cast<std::size_t>(i)] -
           g.k_w_bar * relative_damping(i, tree, w);
}

double xi_flow(const Mat3& rbar, double xi, const Gains& g, const PotentialParams& p)
{
    return -g.k_xi * grad_xi(rbar, xi, p);
}

double xi_jump(const Mat3& rbar, double xi, const PotentialParams& p)
{
    if (gap(rbar, xi, p) < p.delta()) {
        throw std::logic_error("xi_jump: edge is in the flow set");
    }
    return xi_star(rbar, p).angle;
}

AuxRate aux_flow(const Mat3& r, const Mat3& q, double zeta, const Gains& g, const PotentialParams& aux_p)
{
    const Mat3 qt = q.transpose() * r;
    const Vec3 v = qt * aux_output(r, q, zeta, aux_p);
    return {g.k_q * q * hat(v), -g.k_zeta * grad_xi(qt, zeta, aux_p)};
}

double aux_jump(const Mat3& r, const Mat3& q, double zeta, const PotentialParams& aux_p)
{
    const Mat3 qt = q.transpose() * r;
    if (gap(qt, zeta, aux_p) < aux_p.delta()) {
        throw std::logic_error("aux_jump: auxiliary state is in the flow set");
    }
    return xi_star(qt, aux_p).angle;
}

Vec3 vf_torque(int i, const OrientedTree& tree, std::span<const Mat3> r, std::span<const Mat3> rbar,
               std::span<const double> xi, std::span<const Mat3> q, std::span<const double> zeta, const Gains& g,
               const PotentialParams& edge_p, const PotentialParams& aux_p)
{
    const auto n = static_cast<std::size_t>(i);
    return -g.k_r * hybrid_gradient_sum(i, tree, rbar, xi, edge_p) -
           g.k_qtilde * aux_output(r[n], q[n], zeta[n], aux_p);
}

Vec3 experimental_relative_aux_damping(int i, const OrientedTree& tree, std::span<const Mat3> r,
                                       std::span<const Mat3> q, std::span<const double> zeta, const Gains& g,
                                       const PotentialParams& aux_p, bool enabled)
{
    if (!enabled) {
        return Vec3::Zero();
    }
    const auto n = static_cast<std::size_t>(i);
    const Vec3 own = aux_output(r[n], q[n], zeta[n], aux_p);
    Vec3 sum = Vec3::Zero();
    for (int j : tree.neighbors(i)) {
        const auto m = static_cast<std::size_t>(j);
        sum += own - aux_output(r[m], q[m], zeta[m], aux_p);
    }
    return -g.k_w_bar * sum;
}

Eigen::VectorXd stacked_edge_gradients(std::span<const Mat3> rbar, std::span<const double> xi,
                                       const PotentialParams& p)
{
    if (rbar.size() != xi.size()) {
        throw std::invalid_argument("stacked_edge_gradients: length mismatch");
    }
    Eigen::VectorXd out(3 * static_cast<Eigen::Index>(rbar.size()));
    for (std::size_t k = 0; k < rbar.size(); ++k) {
        out.segment<3>(3 * static_cast<Eigen::Index>(k)) = grad_r_body(rbar[k], xi[k], p);
    }
    return out;
}

Eigen::VectorXd stacked_hybrid_torque(const OrientedTree& tree, std::span<const Mat3> rbar,
                                      std::span<const double> xi, std::span<const Vec3> w, const Gains& g,
                                      const PotentialParams& p)
{
    const Eigen::Index n = tree.n_agents();
    Eigen::VectorXd omega(3 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        omega.segment<3>(3 * i) = w[static_cast<std::size_t>(i)];
    }
    const Eigen::MatrixXd lap = laplacian(tree);
    Eigen::MatrixXd l3 = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            l3.block<3, 3>(3 * i, 3 * j) = lap(i, j) * Mat3::Identity();
        }
    }
    return -g.k_r * hbar_matrix(tree, rbar) * stacked_edge_gradients(rbar, xi, p) - g.k_w * omega -
           g.k_w_bar * l3 * omega;
}

}  // namespace attsync
