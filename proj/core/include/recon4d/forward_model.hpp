#pragma once

#include <vector>

#include "recon4d/geometry.hpp"
#include "recon4d/psf.hpp"
#include "recon4d/volume.hpp"

namespace recon4d {

/// Weight sums at or below this are treated as empty footprints; the pixel
/// is invalid rather than given a fabricated value.
inline constexpr double kWeightEps = 1e-12;

/// One acquired 2D slice with its rigid pose, timing and noise level.
struct ScatteredSlice {
    int nu = 0, nv = 0;
    std::vector<double> data;  // u fastest
    int volume_index = 0;
    int slice_index = 0;
    double acq_time = 0.0;  // seconds from series start
    RigidTransform pose;
    double du = 1.0, dv = 1.0;  // in-plane spacing, mm
    double thickness = 1.0;     // mm
    double sigma = 1.0;         // noise standard deviation, intensity units

    double& at(int u, int v) { return data[static_cast<std::size_t>(u) + static_cast<std::size_t>(nu) * v]; }
    double at(int u, int v) const { return data[static_cast<std::size_t>(u) + static_cast<std::size_t>(nu) * v]; }
    std::size_t n_pixels() const { return static_cast<std::size_t>(nu) * nv; }
};

/// Sampling geometry of one slice against a reconstruction grid: the native
/// pixel plane (pre-motion), the pose moving it into grid space, the
/// acquisition time, and cached per-pixel psf weight sums.
struct SliceModel {
    int nu = 0, nv = 0;
    RigidTransform pose;
    double time_s = 0.0;
    Vec3 plane_origin = Vec3::Zero();  // world position of pixel (0,0), pre-motion
    Vec3 eu = Vec3::UnitX();           // pixel step along u (length du)
    Vec3 ev = Vec3::UnitY();           // pixel step along v (length dv)
    PsfParams psf;
    double inv_sigma_sq = 1.0;

    /// Sum of footprint weights per pixel at the model's pose; computed by
    /// build_slice_models. weight_sum[p] <= kWeightEps marks an invalid pixel.
    std::vector<double> weight_sum;

    Vec3 native_point(int u, int v) const { return plane_origin + u * eu + v * ev; }
    std::size_t n_pixels() const { return static_cast<std::size_t>(nu) * nv; }
};

/// Forward projection of one slice: predicted values and the per-pixel psf
/// weight sums that define validity.
struct SliceProjection {
    int nu = 0, nv = 0;
    std::vector<double> values;
    std::vector<double> weight_sum;

    bool valid(std::size_t p) const { return weight_sum[p] > kWeightEps; }
    std::size_t n_valid() const;
};

/// Deterministic sampling models for a set of slices on a grid. Acquisition
/// times map to grid time coordinates as t = acq_time / TR. Emits a warning
/// to the optional sink when a whole slice falls outside the grid.
std::vector<SliceModel> build_slice_models(const std::vector<ScatteredSlice>& slices,
                                           const Grid4D& grid, const PsfParams& psf,
                                           int threads = 1,
                                           std::vector<std::string>* warnings = nullptr);

/// Predicted slice through the current volume estimate: each pixel is the
/// weight-normalized footprint average of x at the motion-transformed pixel
/// position and acquisition time. Pixels with empty footprints carry
/// weight_sum 0 and value 0.
SliceProjection forward_project(const Volume4D& x, const SliceModel& model);

/// Exact adjoint of forward_project (including its normalization):
/// accumulates residual[p] * w / weight_sum[p] into `accum` over every
/// footprint voxel of every valid pixel. `weight_sum` must be the sums the
/// forward pass used (model.weight_sum or a SliceProjection's).
void adjoint_project_into(const std::vector<double>& residual,
                          const std::vector<double>& weight_sum,
                          const SliceModel& model, Volume4D& accum);

/// Convenience form returning a fresh increment volume, using the model's
/// cached weight sums.
Volume4D adjoint_project(const std::vector<double>& residual, const SliceModel& model,
                         const Grid4D& grid);

/// Apply forward_project to every model, parallel over slices.
std::vector<SliceProjection> forward_project_all(const Volume4D& x,
                                                 const std::vector<SliceModel>& models,
                                                 int threads);

/// Accumulate per-slice adjoints scaled by `slice_scale[k]` into one volume.
/// Per-thread partial grids are merged in chunk order, so the result is
/// bitwise-reproducible for a fixed thread count.
Volume4D adjoint_project_all(const std::vector<std::vector<double>>& residuals,
                             const std::vector<SliceModel>& models, const Grid4D& grid,
                             const std::vector<double>& slice_scale, int threads);

/// Stack slices at their native (pre-motion) positions into a 4D series:
/// pixel (u,v) of slice z in volume t lands at voxel (u,v,z,t) when the
/// slice geometry matches the grid. Missing slices are filled from the
/// nearest acquired slice in z within the same volume.
Volume4D assemble_native_series(const std::vector<ScatteredSlice>& slices,
                                const Grid4D& grid);

}  // namespace recon4d
