#include "attsync/potential.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace attsync {

namespace {

constexpr double kPi = std::numbers::pi;

double off_diagonal_norm(const Mat3& a)
{
    return std::sqrt(2.0 * (a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2)));
}

bool nearly_equal(double a, double b)
{
    return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

}  // namespace

SymmetricEigen jacobi_eigen(const Mat3& input)
{
    Mat3 a = 0.5 * (input + input.transpose());
    Mat3 v = Mat3::Identity();
    const double scale = std::max(a.norm(), std::numeric_limits<double>::min());

    for (int sweep = 0; sweep < 64 && off_diagonal_norm(a) > 1e-12 * scale; ++sweep) {
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (a(p, q) == 0.0) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                Mat3 rot = Mat3::Identity();
                rot(p, p) = c;
                rot(q, q) = c;
                rot(p, q) = s;
                rot(q, p) = -s;
                a = rot.transpose() * a * rot;
                v = v * rot;
            }
        }
    }

    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) < a(y, y); });

    SymmetricEigen out;
    for (int c = 0; c < 3; ++c) {
        out.values[c] = a(order[c], order[c]);
        Vec3 col = v.col(order[c]).normalized();
        Eigen::Index arg = 0;
        col.cwiseAbs().maxCoeff(&arg);
        if (col[arg] < 0.0) {
            col = -col;
        }
        out.vectors.col(c) = col;
    }
    return out;
}

PotentialParams PotentialParams::make(const Mat3& a, const Vec3& u, double gamma, double delta,
                                      std::vector<double> switch_set)
{
    if (!a.allFinite() || (a - a.transpose()).norm() > 1e-12) {
        throw std::invalid_argument("potential: A must be symmetric");
    }
    PotentialParams p;
    p.eig_ = jacobi_eigen(a);
    const Vec3& l = p.eig_.values;
    if (!(l[0] > 0.0)) {
        throw std::invalid_argument("potential: A must be positive definite");
    }
    if (!(l[1] < l[2]) || nearly_equal(l[1], l[2])) {
        throw std::invalid_argument("potential: A needs lambda_2 < lambda_3 strictly");
    }
    if (!u.allFinite() || std::abs(u.norm() - 1.0) > tol::kRotation) {
        throw std::invalid_argument("potential: u must be a unit vector");
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("potential: gamma must be positive");
    }
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw std::invalid_argument("potential: delta must be positive");
    }
    if (switch_set.empty()) {
        throw std::invalid_argument("potential: switching set must be non-empty");
    }
    for (double phi : switch_set) {
        if (!(std::abs(phi) > 0.0) || std::abs(phi) > kPi + 1e-12) {
            throw std::invalid_argument("potential: switching angles must satisfy 0 < |phi| <= pi");
        }
    }
    p.a_ = a;
    p.u_ = u;
    p.gamma_ = gamma;
    p.delta_ = delta;
    p.set_ = std::move(switch_set);
    return p;
}

PotentialParams PotentialParams::with_delta(double delta) const
{
    return make(a_, u_, gamma_, delta, set_);
}

PotentialParams PotentialParams::with_gamma(double gamma) const
{
    return make(a_, u_, gamma, delta_, set_);
}

PotentialParams PotentialParams::with_switch_set(std::vector<double> set) const
{
    return make(a_, u_, gamma_, delta_, std::move(set));
}

double u_value(const Mat3& r, double xi, const PotentialParams& p)
{
    const Mat3 rx = r * axis_angle_matrix(xi, p.u());
    return (p.a() * (Mat3::Identity() - rx)).trace() + 0.5 * p.gamma() * xi * xi;
}

double grad_xi(const Mat3& r, double xi, const PotentialParams& p)
{
    const Mat3 ra = axis_angle_matrix(xi, p.u());
    return p.gamma() * xi + 2.0 * p.u().dot(psi(p.a() * r * ra));
}

Vec3 grad_r_body(const Mat3& r, double xi, const PotentialParams& p)
{
    const Mat3 ra = axis_angle_matrix(xi, p.u());
    return psi(ra * p.a() * r);
}

SwitchChoice xi_star(const Mat3& r, const PotentialParams& p)
{
    SwitchChoice best{p.switch_set().front(), u_value(r, p.switch_set().front(), p)};
    for (std::size_t n = 1; n < p.switch_set().size(); ++n) {
        const double phi = p.switch_set()[n];
        const double value = u_value(r, phi, p);
        if (value < best.value) {
            best = {phi, value};
        }
    }
    return best;
}

double gap(const Mat3& r, double xi, const PotentialParams& p)
{
    return u_value(r, xi, p) - xi_star(r, p).value;
}

double SynthesisBounds::delta_bound(double gamma) const
{
    return (gamma_bound - gamma) * phi_l * phi_l / 2.0;
}

SynthesisBounds synthesis_bounds(const Vec3& l, const std::vector<double>& switch_set)
{
    if (!(l[0] > 0.0) || l[0] > l[1] || !(l[1] < l[2]) || nearly_equal(l[1], l[2])) {
        throw std::invalid_argument("synthesis: eigenvalues must satisfy 0 < l1 <= l2 < l3");
    }
    if (switch_set.empty()) {
        throw std::invalid_argument("synthesis: switching set must be non-empty");
    }

    SynthesisBounds b{};
    b.phi_l = 0.0;
    for (double phi : switch_set) {
        b.phi_l = std::max(b.phi_l, std::abs(phi));
    }

    const double boundary = l[0] * l[2] / (l[2] - l[0]);
    if (nearly_equal(l[0], l[1])) {
        b.which = SynthesisCase::repeated_low;
        // Only alpha_3 is pinned; the remainder sits on q_2 since the
        // (q_1, q_2) plane is a single eigenspace.
        b.alpha = Vec3(0.0, std::sqrt(l[1] / l[2]), std::sqrt(1.0 - l[1] / l[2]));
        b.delta_star = l[0] * (1.0 - l[1] / l[2]);
    } else if (l[1] >= boundary) {
        b.which = SynthesisCase::dominant_middle;
        const double s = l[1] + l[2];
        b.alpha = Vec3(0.0, std::sqrt(l[1] / s), std::sqrt(l[2] / s));
        b.delta_star = l[0];
    } else {
        b.which = SynthesisCase::interior;
        // sum over ordered pairs l != k of l_l l_k
        const double pair_sum = 2.0 * (l[0] * l[1] + l[0] * l[2] + l[1] * l[2]);
        const double prod = l[0] * l[1] * l[2];
        for (int i = 0; i < 3; ++i) {
            const double a2 = 1.0 - 4.0 * (prod / l[i]) / pair_sum;
            b.alpha[i] = std::sqrt(std::max(a2, 0.0));
        }
        b.delta_star = 4.0 * prod / pair_sum;
    }
    b.gamma_bound = 4.0 * b.delta_star / (kPi * kPi);
    return b;
}

PotentialParams synthesize(const Vec3& eigenvalues, const Mat3& q_vecs, const std::vector<double>& switch_set,
                           double gamma_fraction, double delta_fraction)
{
    if (!(gamma_fraction > 0.0 && gamma_fraction < 1.0) || !(delta_fraction > 0.0 && delta_fraction < 1.0)) {
        throw std::invalid_argument("synthesis: fractions must lie in (0, 1)");
    }
    if ((q_vecs.transpose() * q_vecs - Mat3::Identity()).norm() > 1e-9) {
        throw std::invalid_argument("synthesis: eigenvectors must be orthonormal");
    }
    const SynthesisBounds b = synthesis_bounds(eigenvalues, switch_set);
    Mat3 a = q_vecs * eigenvalues.asDiagonal() * q_vecs.transpose();
    a = 0.5 * (a + a.transpose());
    const Vec3 u = (q_vecs * b.alpha).normalized();
    const double gamma = gamma_fraction * b.gamma_bound;
    const double delta = delta_fraction * b.delta_bound(gamma);
    return PotentialParams::make(a, u, gamma, delta, switch_set);
}

namespace {

// Gradient of U in (body rotation, xi) coordinates, stacked as a 4-vector.
Eigen::Vector4d full_gradient(const Mat3& r, double xi, const PotentialParams& p)
{
    Eigen::Vector4d f;
    f.head<3>() = grad_r_body(r, xi, p);
    f[3] = grad_xi(r, xi, p);
    return f;
}

Mat3 retract(const Mat3& r, const Vec3& eta)
{
    return project_to_rotation(r * exp_so3(eta).matrix()).matrix();
}

// Damped Newton on the gradient field with a central-difference Jacobian.
bool newton_critical_point(Mat3& r, double& xi, const PotentialParams& p)
{
    constexpr double kStep = 1e-6;
    constexpr double kTol = 1e-10;
    Eigen::Vector4d f = full_gradient(r, xi, p);
    for (int it = 0; it < 80; ++it) {
        if (f.norm() <= kTol) {
            return true;
        }
        Eigen::Matrix4d jac;
        for (int c = 0; c < 4; ++c) {
            Eigen::Vector4d fp;
            Eigen::Vector4d fm;
            if (c < 3) {
                const Vec3 e = Vec3::Unit(c) * kStep;
                fp = full_gradient(r * exp_so3(e).matrix(), xi, p);
                fm = full_gradient(r * exp_so3(-e).matrix(), xi, p);
            } else {
                fp = full_gradient(r, xi + kStep, p);
                fm = full_gradient(r, xi - kStep, p);
            }
            jac.col(c) = (fp - fm) / (2.0 * kStep);
        }
        Eigen::Vector4d d = jac.colPivHouseholderQr().solve(-f);
        if (!d.allFinite()) {
            d = -f;
        }
        double scale = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 30; ++ls) {
            const Mat3 r_try = retract(r, scale * d.head<3>());
            const double xi_try = xi + scale * d[3];
            const Eigen::Vector4d f_try = full_gradient(r_try, xi_try, p);
            if (f_try.norm() < f.norm()) {
                r = r_try;
                xi = xi_try;
                f = f_try;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!improved) {
            break;
        }
    }
    return f.norm() <= kTol;
}

std::vector<Vec3> undesired_axes(const PotentialParams& p)
{
    const Vec3& l = p.eigenvalues();
    const Mat3& q = p.eigenvectors();
    std::vector<Vec3> axes;
    if (nearly_equal(l[0], l[1])) {
        // Any unit vector in span(q1, q2) is an eigenvector.
        constexpr int kSamples = 36;
        for (int s = 0; s < kSamples; ++s) {
            const double th = kPi * s / kSamples;
            axes.push_back((std::cos(th) * q.col(0) + std::sin(th) * q.col(1)).normalized());
        }
    } else {
        axes.push_back(q.col(0));
        axes.push_back(q.col(1));
    }
    axes.push_back(q.col(2));
    return axes;
}

}  // namespace

std::string Condition1Report::describe() const
{
    std::ostringstream os;
    os.precision(6);
    os << "case " << static_cast<int>(bounds.which) << ", Delta* = " << bounds.delta_star
       << ", gamma bound = " << bounds.gamma_bound << ", phi_L = " << bounds.phi_l << "\n";
    os << "alpha = [" << bounds.alpha.transpose() << "]\n";
    os << "gamma within bound: " << (gamma_within_bound ? "yes" : "no")
       << ", delta within bound: " << (delta_within_bound ? "yes" : "no") << "\n";
    for (const auto& pt : eigen_points) {
        os << "  pi-rotation about [" << pt.axis.transpose() << "]: gap = " << pt.gap << ", margin = " << pt.margin
           << "\n";
    }
    os << "neighborhood radius = " << neighborhood_radius << ", min gap there = " << neighborhood_min_gap << "\n";
    os << "critical points found = " << critical_points.size() << ", min undesired margin = " << critical_min_margin
       << "\n";
    os << "numerically certified: " << (numerically_certified ? "yes" : "no") << "\n";
    return os.str();
}

Condition1Report check_condition1(const PotentialParams& p)
{
    Condition1Report rep;
    rep.bounds = synthesis_bounds(p.eigenvalues(), p.switch_set());
    rep.gamma_within_bound = p.gamma() < rep.bounds.gamma_bound;
    rep.delta_within_bound = p.delta() < rep.bounds.delta_bound(p.gamma());

    bool ok = true;
    const auto axes = undesired_axes(p);
    for (std::size_t b = 0; b < axes.size(); ++b) {
        const double g = gap(axis_angle_matrix(kPi, axes[b]), 0.0, p);
        rep.eigen_points.push_back({static_cast<int>(b), axes[b], g, g - p.delta()});
        ok = ok && g > p.delta();
    }

    // Largest grid radius (halving from 0.05) on which the gap stays above delta.
    rep.neighborhood_radius = 0.0;
    rep.neighborhood_min_gap = -std::numeric_limits<double>::infinity();
    for (double radius = 0.05; radius > 1e-3; radius /= 2.0) {
        double min_gap = std::numeric_limits<double>::infinity();
        for (const auto& ax : axes) {
            const Mat3 r = axis_angle_matrix(kPi, ax);
            for (int i = -1; i <= 1; ++i) {
                for (int j = -1; j <= 1; ++j) {
                    for (int k = -1; k <= 1; ++k) {
                        const Mat3 rp = r * exp_so3(radius * Vec3(i, j, k)).matrix();
                        for (int x = -1; x <= 1; ++x) {
                            min_gap = std::min(min_gap, gap(rp, radius * x, p));
                        }
                    }
                }
            }
        }
        rep.neighborhood_min_gap = min_gap;
        if (min_gap > p.delta()) {
            rep.neighborhood_radius = radius;
            break;
        }
    }
    ok = ok && rep.neighborhood_radius > 0.0;

    // Seeded Newton search for the full critical set of U.
    std::vector<Mat3> seeds{Mat3::Identity()};
    for (const auto& ax : axes) {
        seeds.push_back(axis_angle_matrix(kPi, ax));
    }
    std::mt19937_64 rng(0x5eedc0deULL);
    for (int s = 0; s < 48; ++s) {
        seeds.push_back(random_rotation(rng).matrix());
    }
    const std::array<double, 5> xi_seeds{-3.0, -1.5, 0.0, 1.5, 3.0};
    rep.critical_min_margin = std::numeric_limits<double>::infinity();
    for (const Mat3& seed : seeds) {
        for (double xi0 : xi_seeds) {
            Mat3 r = seed;
            double xi = xi0;
            if (!newton_critical_point(r, xi, p)) {
                continue;
            }
            const bool duplicate = std::any_of(rep.critical_points.begin(), rep.critical_points.end(), [&](const CriticalPoint& c) {
                return (c.r.matrix() - r).norm() < 1e-6 && std::abs(c.xi - xi) < 1e-6;
            });
            if (duplicate) {
                continue;
            }
            const bool desired = dist_id_sq(r) <= 1e-10 && std::abs(xi) <= 1e-6;
            const double g = gap(r, xi, p);
            rep.critical_points.push_back({project_to_rotation(r), xi, u_value(r, xi, p), g, desired});
            if (!desired) {
                rep.critical_min_margin = std::min(rep.critical_min_margin, g - p.delta());
                ok = ok && g > p.delta();
            }
        }
    }

    rep.numerically_certified = ok;
    rep.passed = ok && rep.gamma_within_bound && rep.delta_within_bound;
    return rep;
}

std::vector<LabeledEquilibrium> undesired_equilibria(const PotentialParams& p)
{
    const Vec3& l = p.eigenvalues();
    if (nearly_equal(l[0], l[1]) || nearly_equal(l[1], l[2])) {
        throw std::invalid_argument("undesired_equilibria: A must have three distinct eigenvalues");
    }
    std::vector<LabeledEquilibrium> out;
    out.push_back({Rotation::identity(), true, -1});
    for (int b = 0; b < 3; ++b) {
        out.push_back({axis_angle(kPi, p.eigenvectors().col(b)), false, b});
    }
    return out;
}

Vec3 hessian_block_eigs(const Mat3& r_star, const PotentialParams& p)
{
    const Mat3 ar = p.a() * r_star;
    if (psi(ar).norm() > 1e-9) {
        throw std::invalid_argument("hessian_block_eigs: not a critical point of tr(A(I - R))");
    }
    const Mat3 block = ar.trace() * Mat3::Identity() - ar;
    const Mat3& q = p.eigenvectors();
    const Mat3 in_basis = q.transpose() * (0.5 * (block + block.transpose())) * q;
    if (off_diagonal_norm(in_basis) <= 1e-9 * std::max(1.0, block.norm())) {
        return in_basis.diagonal();
    }
    return jacobi_eigen(block).values;
}

double nearest_equilibrium_distance(const Mat3& r, const PotentialParams& p)
{
    double best = (r - Mat3::Identity()).norm();
    for (int b = 0; b < 3; ++b) {
        best = std::min(best, (r - axis_angle_matrix(kPi, p.eigenvectors().col(b))).norm());
    }
    return best;
}

}  // namespace attsync
