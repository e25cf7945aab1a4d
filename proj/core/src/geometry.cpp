#include "recon4d/geometry.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace recon4d {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

RigidTransform RigidTransform::from_degrees(double rx_deg, double ry_deg, double rz_deg,
                                            double tx, double ty, double tz,
                                            const Vec3& center) {
    RigidTransform t;
    t.rx = rx_deg * kPi / 180.0;
    t.ry = ry_deg * kPi / 180.0;
    t.rz = rz_deg * kPi / 180.0;
    t.translation = Vec3(tx, ty, tz);
    t.center = center;
    return t;
}

Mat3 RigidTransform::rotation() const { return euler_to_matrix(rx, ry, rz); }

Vec3 RigidTransform::angles_deg() const {
    return Vec3(rx, ry, rz) * (180.0 / kPi);
}

bool RigidTransform::is_identity(double tol) const {
    return std::abs(rx) <= tol && std::abs(ry) <= tol && std::abs(rz) <= tol &&
           translation.lpNorm<Eigen::Infinity>() <= tol;
}

Mat3 euler_to_matrix(double rx, double ry, double rz) {
    const double cx = std::cos(rx), sx = std::sin(rx);
    const double cy = std::cos(ry), sy = std::sin(ry);
    const double cz = std::cos(rz), sz = std::sin(rz);

    Mat3 r;
    // Rz * Ry * Rx expanded.
    r(0, 0) = cz * cy;
    r(0, 1) = cz * sy * sx - sz * cx;
    r(0, 2) = cz * sy * cx + sz * sx;
    r(1, 0) = sz * cy;
    r(1, 1) = sz * sy * sx + cz * cx;
    r(1, 2) = sz * sy * cx - cz * sx;
    r(2, 0) = -sy;
    r(2, 1) = cy * sx;
    r(2, 2) = cy * cx;
    return r;
}

Vec3 matrix_to_euler(const Mat3& r) {
    const double sy = -r(2, 0);
    const double ry = std::asin(std::clamp(sy, -1.0, 1.0));
    const double cy = std::cos(ry);

    double rx, rz;
    if (std::abs(cy) > 1e-12) {
        rx = std::atan2(r(2, 1), r(2, 2));
        rz = std::atan2(r(1, 0), r(0, 0));
    } else {
        // Gimbal lock: only rx ± rz is determined; pin rz = 0.
        rx = std::atan2(-r(1, 2), r(1, 1));
        rz = 0.0;
    }
    return {rx, ry, rz};
}

Vec3 apply_transform(const RigidTransform& t, const Vec3& p) {
    return t.rotation() * (p - t.center) + t.center + t.translation;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    const Mat3 ra = a.rotation();
    const Mat3 rb = b.rotation();
    const Mat3 r = ra * rb;

    // Constant part of p -> a(b(p)):
    //   a(b(p)) = Ra Rb p + Ra(cb + tb - Rb cb - ca) + ca + ta
    const Vec3 k = ra * (b.center + b.translation - rb * b.center - a.center) +
                   a.center + a.translation;

    RigidTransform out;
    const Vec3 angles = matrix_to_euler(r);
    out.rx = angles.x();
    out.ry = angles.y();
    out.rz = angles.z();
    out.center = a.center;
    // p -> R(p - c) + c + t has constant part c + t - R c.
    out.translation = k - out.center + r * out.center;
    return out;
}

RigidTransform invert(const RigidTransform& t) {
    const Mat3 rt = t.rotation().transpose();
    RigidTransform out;
    const Vec3 angles = matrix_to_euler(rt);
    out.rx = angles.x();
    out.ry = angles.y();
    out.rz = angles.z();
    out.center = t.center;
    out.translation = -(rt * t.translation);
    return out;
}

double rigidity_error(const RigidTransform& t) {
    const Mat3 r = t.rotation();
    const Mat3 gram = r.transpose() * r - Mat3::Identity();
    return gram.cwiseAbs().maxCoeff() + std::abs(r.determinant() - 1.0);
}

void Grid3D::validate() const {
    if (nx < 1 || ny < 1 || nz < 1)
        throw std::invalid_argument("Grid3D: all dims must be >= 1");
    if (!(dx > 0.0) || !(dy > 0.0) || !(dz > 0.0))
        throw std::invalid_argument("Grid3D: all spacings must be > 0");
}

void Grid4D::validate() const {
    space.validate();
    if (nt < 1) throw std::invalid_argument("Grid4D: nt must be >= 1");
    if (!(tr > 0.0)) throw std::invalid_argument("Grid4D: tr must be > 0");
}

}  // namespace recon4d
