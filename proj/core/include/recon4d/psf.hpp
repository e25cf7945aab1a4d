#pragma once

#include <cmath>
#include <vector>

#include "recon4d/geometry.hpp"

namespace recon4d {

/// Separable 4D Gaussian point spread function. Spatial widths are mm; the
/// temporal width is expressed in mm-equivalents after scaling seconds by
/// `time_scale` (through-plane resolution divided by TR), so one space-time
/// distance metric covers all four axes.
struct PsfParams {
    double sigma_x = 1.0;
    double sigma_y = 1.0;
    double sigma_z = 1.0;
    double sigma_t = 1.0;          // mm-equivalent
    double time_scale = 1.0;       // seconds -> mm-equivalents
    double truncation_radius = 3.0;  // cutoff, units of sigma per axis

    void validate() const;
};

/// Factor mapping seconds to mm-equivalents: res(z) / TR.
/// Throws std::invalid_argument on non-positive input.
double time_scale_factor(double slice_thickness_mm, double tr_s);

/// Default widths for a grid: FWHM of one voxel per spatial axis
/// (sigma = spacing / 2.355) and one scaled TR temporally.
PsfParams default_psf(const Grid4D& grid);

/// Unnormalized Gaussian weight at a space-time offset. Exactly zero as
/// soon as any per-axis scaled offset exceeds truncation_radius * sigma.
/// Peak value is 1 at zero offset.
double psf_weight(const PsfParams& p, double dx, double dy, double dz, double dt_s);

struct FootprintEntry {
    int i, j, k, t;
    double weight;
};

/// All grid voxels inside the truncation box around a world point and
/// acquisition time, with their psf weights. May be empty when the center
/// lies outside the grid's reach.
std::vector<FootprintEntry> kernel_footprint(const PsfParams& p, const Grid4D& grid,
                                             const Vec3& center_world, double time_s);

namespace detail {

// Per-axis truncated index range [lo, hi] around fractional center c with
// half-width `reach` (voxel units), clamped to [0, n).
inline void axis_range(double c, double reach, int n, int& lo, int& hi) {
    lo = static_cast<int>(std::ceil(c - reach));
    hi = static_cast<int>(std::floor(c + reach));
    if (lo < 0) lo = 0;
    if (hi > n - 1) hi = n - 1;
}

}  // namespace detail

/// Enumerate the truncated footprint of the psf centered at (world, time),
/// calling f(i, j, k, t, weight) for every voxel with weight > 0. This is
/// the single evaluation path shared by kernel_footprint and the projection
/// operators; weights match psf_weight exactly.
template <typename F>
inline void for_each_footprint_entry(const PsfParams& p, const Grid4D& grid,
                                     const Vec3& center_world, double time_s, F&& f) {
    const Grid3D& s = grid.space;
    const Vec3 cv = s.world_to_voxel(center_world);
    const double ct = time_s / grid.tr;

    int ilo, ihi, jlo, jhi, klo, khi, tlo, thi;
    detail::axis_range(cv.x(), p.truncation_radius * p.sigma_x / s.dx, s.nx, ilo, ihi);
    detail::axis_range(cv.y(), p.truncation_radius * p.sigma_y / s.dy, s.ny, jlo, jhi);
    detail::axis_range(cv.z(), p.truncation_radius * p.sigma_z / s.dz, s.nz, klo, khi);
    detail::axis_range(ct, p.truncation_radius * p.sigma_t / (p.time_scale * grid.tr),
                       grid.nt, tlo, thi);
    if (ilo > ihi || jlo > jhi || klo > khi || tlo > thi) return;

    constexpr int kMaxAxis = 64;
    if (ihi - ilo >= kMaxAxis || jhi - jlo >= kMaxAxis || khi - klo >= kMaxAxis ||
        thi - tlo >= kMaxAxis) {
        // Very wide kernels: evaluate directly, same math, no stack buffers.
        for (int t = tlo; t <= thi; ++t)
            for (int k = klo; k <= khi; ++k)
                for (int j = jlo; j <= jhi; ++j)
                    for (int i = ilo; i <= ihi; ++i)
                        f(i, j, k, t,
                          psf_weight(p, (i - cv.x()) * s.dx, (j - cv.y()) * s.dy,
                                     (k - cv.z()) * s.dz, (t - ct) * grid.tr));
        return;
    }

    // Separable per-axis factors; the 4D weight is their product.
    double wx[kMaxAxis], wy[kMaxAxis], wz[kMaxAxis], wt[kMaxAxis];
    const double inv2sx = 0.5 / (p.sigma_x * p.sigma_x);
    const double inv2sy = 0.5 / (p.sigma_y * p.sigma_y);
    const double inv2sz = 0.5 / (p.sigma_z * p.sigma_z);
    const double inv2st = 0.5 / (p.sigma_t * p.sigma_t);
    for (int i = ilo; i <= ihi; ++i) {
        const double d = (i - cv.x()) * s.dx;
        wx[i - ilo] = std::exp(-d * d * inv2sx);
    }
    for (int j = jlo; j <= jhi; ++j) {
        const double d = (j - cv.y()) * s.dy;
        wy[j - jlo] = std::exp(-d * d * inv2sy);
    }
    for (int k = klo; k <= khi; ++k) {
        const double d = (k - cv.z()) * s.dz;
        wz[k - klo] = std::exp(-d * d * inv2sz);
    }
    for (int t = tlo; t <= thi; ++t) {
        const double d = (t - ct) * grid.tr * p.time_scale;
        wt[t - tlo] = std::exp(-d * d * inv2st);
    }

    for (int t = tlo; t <= thi; ++t) {
        const double ft = wt[t - tlo];
        for (int k = klo; k <= khi; ++k) {
            const double ftz = ft * wz[k - klo];
            for (int j = jlo; j <= jhi; ++j) {
                const double ftzy = ftz * wy[j - jlo];
                for (int i = ilo; i <= ihi; ++i) {
                    f(i, j, k, t, ftzy * wx[i - ilo]);
                }
            }
        }
    }
}

}  // namespace recon4d
