#pragma once

#include <cstdint>
#include <vector>

#include "recon4d/geometry.hpp"

namespace recon4d {

/// Single 3D intensity volume on a regular grid.
struct Volume3D {
    Grid3D grid;
    std::vector<double> data;  // x fastest, then y, then z

    Volume3D() = default;
    explicit Volume3D(const Grid3D& g, double fill = 0.0)
        : grid(g), data(g.n_voxels(), fill) {}

    double& at(int i, int j, int k) { return data[grid.index(i, j, k)]; }
    double at(int i, int j, int k) const { return data[grid.index(i, j, k)]; }
};

/// Regular 4D grid of intensities: one Volume3D worth of voxels per timepoint.
struct Volume4D {
    Grid4D grid;
    std::vector<double> data;  // x fastest, t slowest

    Volume4D() = default;
    explicit Volume4D(const Grid4D& g, double fill = 0.0)
        : grid(g), data(g.n_voxels(), fill) {}

    double& at(int i, int j, int k, int t) { return data[grid.index(i, j, k, t)]; }
    double at(int i, int j, int k, int t) const { return data[grid.index(i, j, k, t)]; }

    Volume3D timepoint(int t) const;
    void set_timepoint(int t, const Volume3D& v);

    /// Per-voxel mean over the time axis.
    Volume3D temporal_mean() const;

    bool all_finite() const;
};

/// Binary 3D mask, 0/1 per voxel.
struct Mask3D {
    Grid3D grid;
    std::vector<std::uint8_t> data;

    Mask3D() = default;
    explicit Mask3D(const Grid3D& g, std::uint8_t fill = 0)
        : grid(g), data(g.n_voxels(), fill) {}

    bool at(int i, int j, int k) const { return data[grid.index(i, j, k)] != 0; }
    void set(int i, int j, int k, bool v) { data[grid.index(i, j, k)] = v ? 1 : 0; }
    std::size_t count() const;

    /// Mask covering the whole grid.
    static Mask3D full(const Grid3D& g) { return Mask3D(g, 1); }
};

/// Morphological dilation with a city-block ball of the given radius
/// (radius iterations of 6-neighbour dilation). Radius 0 returns the input.
Mask3D dilate_mask(const Mask3D& mask, int radius_voxels);

/// Trilinear sample at a fractional voxel coordinate. Points outside the
/// grid hull return `outside` and set *inside=false when provided.
double sample_trilinear(const Volume3D& v, const Vec3& voxel, bool* inside = nullptr,
                        double outside = 0.0);

/// 2x block-average downsample of each spatial axis (for registration pyramids).
Volume3D downsample2(const Volume3D& v);
Mask3D downsample2(const Mask3D& m);

/// Resample onto a spatially 2x finer grid (2n-1 voxels per axis, same world
/// extent) by trilinear interpolation; the time axis is unchanged.
Volume4D refine_space2(const Volume4D& v);

/// Fill voxels not marked `covered` with the value of the nearest covered
/// voxel (city-block BFS). When `mask` is given, in-mask holes are filled
/// from in-mask sources only; voxels outside the mask fill unrestricted.
/// Uncoverable voxels (no source reachable) are left unchanged.
void fill_from_nearest(Volume3D& v, const std::vector<std::uint8_t>& covered,
                       const Mask3D* mask = nullptr);

}  // namespace recon4d
