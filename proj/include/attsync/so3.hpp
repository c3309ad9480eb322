#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace attsync {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

namespace tol {
/// Orthogonality / determinant slack accepted when a Rotation is built.
inline constexpr double kRotation = 1e-9;
/// Stopping threshold of the polar projection.
inline constexpr double kProjection = 1e-12;
/// Skew-symmetry slack accepted by vex().
inline constexpr double kSkew = 1e-12;
/// Below this angle exp_so3 switches to its Taylor series.
inline constexpr double kExpSeries = 1e-6;
}  // namespace tol

/// Element of SO(3). The wrapped matrix always satisfies
/// ||m^T m - I||_F <= tol::kRotation and |det m - 1| <= tol::kRotation.
class Rotation {
public:
    Rotation() : m_(Mat3::Identity()) {}

    /// Throws std::invalid_argument when `m` is not a rotation.
    explicit Rotation(const Mat3& m);

    static Rotation identity() { return Rotation(); }

    const Mat3& matrix() const { return m_; }
    operator const Mat3&() const { return m_; }  // NOLINT(google-explicit-constructor)

    Rotation transpose() const { return Rotation(m_.transpose(), Unchecked{}); }
    Rotation operator*(const Rotation& rhs) const { return Rotation(m_ * rhs.m_, Unchecked{}); }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }

    bool operator==(const Rotation& rhs) const { return m_ == rhs.m_; }

    /// Orthogonality defect ||m^T m - I||_F.
    static double orthogonality_error(const Mat3& m);
    static bool is_rotation(const Mat3& m, double tolerance = tol::kRotation);

private:
    struct Unchecked {};
    Rotation(const Mat3& m, Unchecked) : m_(m) {}
    Mat3 m_;
};

/// [v]x, so that hat(v) * w == v.cross(w).
Mat3 hat(const Vec3& v);

/// Inverse of hat(). Throws std::invalid_argument if ||S + S^T||_F exceeds
/// `tolerance`.
Vec3 vex(const Mat3& s, double tolerance = tol::kSkew);

/// Skew-symmetric part (C - C^T) / 2.
inline Mat3 skew_part(const Mat3& c) { return 0.5 * (c - c.transpose()); }

/// vex of the skew part: 0.5 * [c32 - c23, c13 - c31, c21 - c12].
inline Vec3 psi(const Mat3& c)
{
    return 0.5 * Vec3(c(2, 1) - c(1, 2), c(0, 2) - c(2, 0), c(1, 0) - c(0, 1));
}

/// |R|_I^2 = tr(I - R) / 4, in [0, 1] on SO(3).
inline double dist_id_sq(const Mat3& r) { return 0.25 * (3.0 - r.trace()); }

/// Rodrigues: I + sin(theta) [u]x + (1 - cos(theta)) [u]x^2.
/// Throws std::invalid_argument unless | ||u|| - 1 | <= 1e-9.
Rotation axis_angle(double theta, const Vec3& u);

/// Matrix form of axis_angle without the axis check or Rotation wrapper.
/// Hot-path helper; `u` must already be unit length.
Mat3 axis_angle_matrix(double theta, const Vec3& u);

Rotation exp_so3(const Vec3& v);

/// Nearest rotation by the averaging iteration M <- (M + M^-T) / 2.
/// Throws std::invalid_argument for singular or det <= 0 input, and
/// std::runtime_error if the iteration fails to settle.
Rotation project_to_rotation(const Mat3& m);

/// Haar-uniform sample (normalized 4-d Gaussian read as a unit quaternion).
Rotation random_rotation(std::mt19937_64& rng);
Rotation random_rotation(std::uint64_t seed);

/// Uniform point on the unit sphere.
Vec3 random_unit_vector(std::mt19937_64& rng);

}  // namespace attsync
