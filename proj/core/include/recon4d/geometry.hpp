#pragma once

#include <Eigen/Core>

namespace recon4d {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// 6-DOF rigid motion: three Euler angles (radians) and a translation,
/// rotating about a fixed center point given in world coordinates (mm).
///
/// Convention: R = Rz(rz) * Ry(ry) * Rx(rx), intrinsic, right-handed.
/// Angles are radians internally; every file and CLI boundary uses degrees.
struct RigidTransform {
    double rx = 0.0;
    double ry = 0.0;
    double rz = 0.0;
    Vec3 translation = Vec3::Zero();
    Vec3 center = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    /// Construct from degrees, the unit used by pose files and the CLI.
    static RigidTransform from_degrees(double rx_deg, double ry_deg, double rz_deg,
                                       double tx, double ty, double tz,
                                       const Vec3& center = Vec3::Zero());

    /// Composed rotation matrix Rz * Ry * Rx.
    Mat3 rotation() const;

    /// Angles in degrees, same order as the pose CSV columns.
    Vec3 angles_deg() const;

    bool is_identity(double tol = 0.0) const;
};

/// Rotation matrix from Euler angles, Rz(rz) * Ry(ry) * Rx(rx).
Mat3 euler_to_matrix(double rx, double ry, double rz);

/// Inverse of euler_to_matrix. Returns (rx, ry, rz) in radians.
/// Well-defined for ry away from ±90°; at gimbal lock rz is fixed to 0.
Vec3 matrix_to_euler(const Mat3& r);

/// p -> R * (p - center) + center + translation.
Vec3 apply_transform(const RigidTransform& t, const Vec3& p);

/// Transform equal to applying b first, then a. The result keeps a's center.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

/// Inverse transform about the same center.
RigidTransform invert(const RigidTransform& t);

/// Max deviation of RᵀR from identity plus |det R - 1|; near zero for a
/// valid proper rotation.
double rigidity_error(const RigidTransform& t);

/// Regular 3D voxel grid. Zero-based fractional indices, origin at the
/// center of voxel (0,0,0).
struct Grid3D {
    int nx = 0, ny = 0, nz = 0;
    double dx = 1.0, dy = 1.0, dz = 1.0;
    Vec3 origin = Vec3::Zero();

    std::size_t n_voxels() const {
        return static_cast<std::size_t>(nx) * ny * nz;
    }
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(nx) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(ny) * k);
    }
    bool contains(int i, int j, int k) const {
        return i >= 0 && i < nx && j >= 0 && j < ny && k >= 0 && k < nz;
    }

    Vec3 voxel_to_world(const Vec3& idx) const {
        return origin + Vec3(idx.x() * dx, idx.y() * dy, idx.z() * dz);
    }
    Vec3 world_to_voxel(const Vec3& p) const {
        const Vec3 d = p - origin;
        return {d.x() / dx, d.y() / dy, d.z() / dz};
    }

    /// Geometric center of the grid in world coordinates; the default
    /// rotation center for motion parameters.
    Vec3 center_world() const {
        return voxel_to_world(Vec3((nx - 1) / 2.0, (ny - 1) / 2.0, (nz - 1) / 2.0));
    }

    /// Throws std::invalid_argument if dims or spacings are out of contract.
    void validate() const;
};

/// Space-time grid: a Grid3D plus nt timepoints spaced tr seconds apart.
/// Timepoint it corresponds to time it * tr, zero-based.
struct Grid4D {
    Grid3D space;
    int nt = 0;
    double tr = 1.0;  // repetition time, seconds

    int nx() const { return space.nx; }
    int ny() const { return space.ny; }
    int nz() const { return space.nz; }

    std::size_t n_voxels() const { return space.n_voxels() * static_cast<std::size_t>(nt); }
    std::size_t index(int i, int j, int k, int t) const {
        return space.index(i, j, k) + space.n_voxels() * static_cast<std::size_t>(t);
    }
    bool contains(int i, int j, int k, int t) const {
        return space.contains(i, j, k) && t >= 0 && t < nt;
    }

    /// Fractional 4D index -> (world point mm, time s).
    std::pair<Vec3, double> voxel_to_world(const Vec3& idx, double it) const {
        return {space.voxel_to_world(idx), it * tr};
    }
    std::pair<Vec3, double> world_to_voxel(const Vec3& p, double time_s) const {
        return {space.world_to_voxel(p), time_s / tr};
    }

    void validate() const;
};

}  // namespace recon4d
