#pragma once

#include <string>
#include <vector>

#include "attsync/so3.hpp"

namespace attsync {

/// Eigen-decomposition of a symmetric 3x3 matrix: ascending eigenvalues,
/// matching unit eigenvectors in the columns of `vectors`.
struct SymmetricEigen {
    Vec3 values;
    Mat3 vectors;
};

/// Cyclic Jacobi sweeps until the off-diagonal Frobenius norm drops below
/// 1e-12 * ||a||_F. Each eigenvector is signed so that its largest-magnitude
/// entry is positive.
SymmetricEigen jacobi_eigen(const Mat3& a);

/// Parameters of U(R, xi) = tr(A (I - R Ra(xi, u))) + gamma/2 xi^2 together
/// with the switching set and jump threshold delta.
///
/// make() enforces: A symmetric (1e-12) with 0 < l1 <= l2 < l3, ||u|| = 1
/// (1e-9), gamma > 0, delta > 0, a non-empty switching set whose angles
/// satisfy 0 < |phi| <= pi. The tighter gamma/delta bounds that guarantee the
/// switching condition are *not* enforced here; check_condition1() reports on
/// them so infeasible parameter sets can still be inspected.
class PotentialParams {
public:
    static PotentialParams make(const Mat3& a, const Vec3& u, double gamma, double delta,
                                std::vector<double> switch_set);

    const Mat3& a() const { return a_; }
    const Vec3& u() const { return u_; }
    double gamma() const { return gamma_; }
    double delta() const { return delta_; }
    const std::vector<double>& switch_set() const { return set_; }
    const Vec3& eigenvalues() const { return eig_.values; }
    const Mat3& eigenvectors() const { return eig_.vectors; }

    PotentialParams with_delta(double delta) const;
    PotentialParams with_gamma(double gamma) const;
    PotentialParams with_switch_set(std::vector<double> set) const;

private:
    PotentialParams() = default;
    Mat3 a_ = Mat3::Identity();
    Vec3 u_ = Vec3::UnitZ();
    double gamma_ = 0.0;
    double delta_ = 0.0;
    std::vector<double> set_;
    SymmetricEigen eig_{};
};

/// U(R, xi).
double u_value(const Mat3& r, double xi, const PotentialParams& p);

/// dU/dxi = gamma xi + 2 u^T psi(A R Ra(xi, u)).
double grad_xi(const Mat3& r, double xi, const PotentialParams& p);

/// Body-frame rotation gradient g = psi(Ra(xi, u) A R): the derivative of U
/// along R exp(t [eta]x) at t = 0 is 2 eta^T g.
Vec3 grad_r_body(const Mat3& r, double xi, const PotentialParams& p);

struct SwitchChoice {
    double angle;
    double value;
};

/// Minimizer of U(R, .) over the switching set. Ties go to the earliest entry.
SwitchChoice xi_star(const Mat3& r, const PotentialParams& p);

/// U(R, xi) - min over the switching set. Jumps are enabled iff gap >= delta.
double gap(const Mat3& r, double xi, const PotentialParams& p);

/// Which branch of the parameter-synthesis rule applies.
enum class SynthesisCase {
    repeated_low = 1,    ///< l1 == l2
    dominant_middle = 2, ///< l2 >= l1 l3 / (l3 - l1)
    interior = 3,        ///< l1 < l2 < l1 l3 / (l3 - l1)
};

/// Feasibility bounds derived from the eigenvalues of A and the switching set.
struct SynthesisBounds {
    SynthesisCase which;
    Vec3 alpha;          ///< nonnegative weights of u on the eigenvectors
    double delta_star;   ///< Delta*
    double gamma_bound;  ///< 4 Delta* / pi^2; gamma must lie strictly below
    double phi_l;        ///< max |phi| over the switching set

    /// Strict upper bound on delta for a given gamma.
    double delta_bound(double gamma) const;
};

/// Throws std::invalid_argument for unsorted, non-positive or l2 == l3
/// eigenvalues, or an empty switching set.
SynthesisBounds synthesis_bounds(const Vec3& eigenvalues, const std::vector<double>& switch_set);

/// Builds A = Q diag(l) Q^T, u = sum alpha_i q_i, gamma = gamma_fraction *
/// gamma_bound and delta = delta_fraction * delta_bound(gamma).
/// `q_vecs` holds the eigenvectors as columns.
PotentialParams synthesize(const Vec3& eigenvalues, const Mat3& q_vecs, const std::vector<double>& switch_set,
                           double gamma_fraction, double delta_fraction);

/// Critical point of U located by the Newton search in check_condition1().
struct CriticalPoint {
    Rotation r;
    double xi;
    double value;
    double gap;
    bool desired;
};

struct Condition1Point {
    int beta;          ///< 0-based eigenvector index (or sample index for a repeated pair)
    Vec3 axis;
    double gap;
    double margin;     ///< gap - delta
};

struct Condition1Report {
    SynthesisBounds bounds;
    bool gamma_within_bound = false;
    bool delta_within_bound = false;
    std::vector<Condition1Point> eigen_points;  ///< gaps at (Ra(pi, q_beta), 0)
    double neighborhood_radius = 0.0;           ///< largest grid radius tried on which every gap exceeds delta; 0 if none
    double neighborhood_min_gap = 0.0;          ///< min gap over the grid of that (or the last tried) radius
    std::vector<CriticalPoint> critical_points; ///< every critical point found by the search
    double critical_min_margin = 0.0;           ///< min (gap - delta) over undesired critical points
    bool numerically_certified = false;         ///< every undesired point above has gap > delta
    bool passed = false;                        ///< numerically_certified && both bounds hold

    std::string describe() const;
};

/// Numerical certificate of the switching condition: evaluates the gap at
/// every pi-rotation about an eigenvector of A, on a grid around those
/// points, and at every critical point found by a seeded Newton search.
Condition1Report check_condition1(const PotentialParams& p);

/// Equilibrium of the unswitched potential tr(A (I - R)).
struct LabeledEquilibrium {
    Rotation r;
    bool desired;
    int beta;   ///< -1 for the identity
};

/// I (desired) followed by Ra(pi, q_beta) for beta = 1..3. Throws if A has a
/// repeated eigenvalue, since the undesired set is then not isolated.
std::vector<LabeledEquilibrium> undesired_equilibria(const PotentialParams& p);

/// Eigenvalues of tr(A R*) I - A R*. When that block is diagonal in the
/// eigenbasis of A (always the case at the enumerated equilibria) they are
/// returned in eigenvector order q_1, q_2, q_3; otherwise ascending.
/// Throws std::invalid_argument if ||psi(A R*)|| > 1e-9.
Vec3 hessian_block_eigs(const Mat3& r_star, const PotentialParams& p);

/// Distance from an edge rotation to the nearest enumerated equilibrium
/// (Frobenius norm of the difference).
double nearest_equilibrium_distance(const Mat3& r, const PotentialParams& p);

}  // namespace attsync
