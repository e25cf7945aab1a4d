#pragma once

#include <optional>
#include <string>
#include <utility>

#include "recon4d/volume.hpp"

namespace recon4d {

/// Focus measure: variance of the 6-neighbour 3D Laplacian response over
/// in-mask interior voxels, scaled by their count (i.e. the sum of squared
/// deviations of the Laplacian from its in-mask mean). The stencil is
/// unit-spacing: L(v) = sum over axes of (v[-1] - 2 v[0] - ... + v[+1]).
/// Quadratically homogeneous and invariant to constant offsets.
/// Throws std::invalid_argument on an empty mask.
double sharpness(const Volume3D& volume, const Mask3D& mask);

/// Per-voxel population standard deviation over time, and its mean over the
/// mask. Requires nt >= 2.
std::pair<Volume3D, double> temporal_std(const Volume4D& series, const Mask3D& mask);

/// In-mask root-mean-square error between two series on the same grid.
double rmse_in_mask(const Volume4D& a, const Volume4D& b, const Mask3D& mask);

/// Side-by-side evaluation of raw, 3D-linear, and 4D reconstructions.
struct EvaluationReport {
    double sharpness_raw = 0.0, sharpness_linear = 0.0, sharpness_ours = 0.0;
    double std_raw = 0.0, std_linear = 0.0, std_ours = 0.0;
    // Normalized to raw, exactly value / raw.
    double rel_sharpness_linear = 0.0, rel_sharpness_ours = 0.0;
    double rel_std_linear = 0.0, rel_std_ours = 0.0;
    std::optional<double> rmse_raw, rmse_linear, rmse_ours;

    static std::string csv_header();
    std::string csv_row(const std::string& subject) const;
    std::string key_value_text() const;
};

/// Compute the full report. Sharpness is measured on each series' temporal
/// mean volume. All grids must match; `truth` adds RMSE columns.
EvaluationReport evaluate(const Volume4D& raw, const Volume4D& linear,
                          const Volume4D& ours, const Mask3D& mask,
                          const Volume4D* truth = nullptr);

}  // namespace recon4d
