#include "attsync/so3.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace attsync {

Rotation::Rotation(const Mat3& m) : m_(m)
{
    if (!is_rotation(m)) {
        throw std::invalid_argument("matrix is not in SO(3): orthogonality error " +
                                    std::to_string(orthogonality_error(m)) + ", det " +
                                    std::to_string(m.determinant()));
    }
}

double Rotation::orthogonality_error(const Mat3& m)
{
    return (m.transpose() * m - Mat3::Identity()).norm();
}

bool Rotation::is_rotation(const Mat3& m, double tolerance)
{
    if (!m.allFinite()) {
        return false;
    }
    return orthogonality_error(m) <= tolerance && std::abs(m.determinant() - 1.0) <= tolerance;
}

Mat3 hat(const Vec3& v)
{
    Mat3 s;
    s << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
        -v.y(), v.x(), 0.0;
    return s;
}

Vec3 vex(const Mat3& s, double tolerance)
{
    if ((s + s.transpose()).norm() > tolerance) {
        throw std::invalid_argument("vex: input is not skew-symmetric");
    }
    return Vec3(s(2, 1), s(0, 2), s(1, 0));
}

Mat3 axis_angle_matrix(double theta, const Vec3& u)
{
    const Mat3 k = hat(u);
    return Mat3::Identity() + std::sin(theta) * k + (1.0 - std::cos(theta)) * (k * k);
}

Rotation axis_angle(double theta, const Vec3& u)
{
    if (std::abs(u.norm() - 1.0) > tol::kRotation) {
        throw std::invalid_argument("axis_angle: axis is not a unit vector");
    }
    return Rotation(axis_angle_matrix(theta, u));
}

Rotation exp_so3(const Vec3& v)
{
    const double theta = v.norm();
    const Mat3 k = hat(v);
    if (theta < tol::kExpSeries) {
        // sin(t)/t ~ 1 - t^2/6, (1 - cos t)/t^2 ~ 1/2 - t^2/24
        const double t2 = theta * theta;
        return project_to_rotation(Mat3::Identity() + (1.0 - t2 / 6.0) * k +
                                   (0.5 - t2 / 24.0) * (k * k));
    }
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / (theta * theta);
    return Rotation(Mat3::Identity() + a * k + b * (k * k));
}

Rotation project_to_rotation(const Mat3& m)
{
    if (!m.allFinite()) {
        throw std::invalid_argument("project_to_rotation: non-finite input");
    }
    const double det = m.determinant();
    const double scale = std::max(m.norm(), 1e-300);
    if (std::abs(det) <= 1e-12 * scale * scale * scale) {
        throw std::invalid_argument("project_to_rotation: singular input");
    }
    if (det < 0.0) {
        throw std::invalid_argument("project_to_rotation: reflection-like input (det < 0)");
    }

    Mat3 x = m;
    constexpr int kMaxIterations = 100;
    for (int it = 0; it < kMaxIterations; ++it) {
        if (Rotation::orthogonality_error(x) <= tol::kProjection) {
            return Rotation(x);
        }
        x = 0.5 * (x + x.inverse().transpose());
    }
    if (Rotation::orthogonality_error(x) <= tol::kProjection) {
        return Rotation(x);
    }
    throw std::runtime_error("project_to_rotation: iteration did not converge");
}

Rotation random_rotation(std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector4d q;
    do {
        for (int i = 0; i < 4; ++i) {
            q[i] = normal(rng);
        }
    } while (q.norm() < 1e-12);
    q.normalize();
    const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
    return project_to_rotation(quat.toRotationMatrix());
}

Rotation random_rotation(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return random_rotation(rng);
}

Vec3 random_unit_vector(std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec3 v;
    do {
        v = Vec3(normal(rng), normal(rng), normal(rng));
    } while (v.norm() < 1e-12);
    return v.normalized();
}

}  // namespace attsync
