#pragma once

#include <string>
#include <utility>
#include <vector>

#include "recon4d/forward_model.hpp"
#include "recon4d/volume.hpp"

namespace recon4d {

enum class SolverKind { conjugate_gradient, iterative_backprojection };
enum class InitKind { normalized_scatter, zeros };

SolverKind parse_solver_kind(const std::string& s);
InitKind parse_init_kind(const std::string& s);
std::string to_string(SolverKind k);
std::string to_string(InitKind k);

struct ReconConfig {
    double alpha = 0.01;  // regularization weight, >= 0
    int max_iters = 50;
    double tol = 1e-6;  // relative objective-change convergence threshold
    SolverKind kind = SolverKind::conjugate_gradient;
    double step_size = 0.1;  // relaxation factor, iterative-backprojection mode
    InitKind init = InitKind::normalized_scatter;
    int threads = 1;

    void validate() const;
};

struct ReconReport {
    std::vector<double> data_terms;
    std::vector<double> reg_terms;
    std::vector<double> totals;  // one entry per iteration, initial state included
    int iterations = 0;
    bool converged = false;
    bool diverged = false;
    std::string note;

    double final_objective() const { return totals.empty() ? 0.0 : totals.back(); }
};

struct ObjectiveParts {
    double total = 0.0;
    double data = 0.0;
    double reg = 0.0;
};

/// Squared L2 norm of first-order forward differences along x, y, z and
/// scaled time (spacing-weighted; one-sided at edges so constants are in
/// the null space exactly). time_scale maps seconds to mm-equivalents.
double regularizer_value(const Volume4D& x, double time_scale);

/// out = Lᵀ L x for the first-difference operator above. `accumulate` adds
/// into out instead of overwriting.
void apply_regularizer_normal(const Volume4D& x, double time_scale, Volume4D& out,
                              bool accumulate = false);

/// MAP objective of the reconstruction:
///   data = Σ_k (1/σ_k²) ‖F_k(x) − S_k‖² over valid pixels,
///   reg  = ‖∇₄ x‖²,  total = data + (alpha/2) reg.
ObjectiveParts objective(const Volume4D& x, const std::vector<ScatteredSlice>& slices,
                         const std::vector<SliceModel>& models, double alpha,
                         int threads = 1);

/// Gradient of the objective: 2 Σ_k (1/σ_k²) Hᵀ_k (F_k(x) − S_k) + alpha LᵀL x.
Volume4D objective_gradient(const Volume4D& x, const std::vector<ScatteredSlice>& slices,
                            const std::vector<SliceModel>& models, double alpha,
                            int threads = 1);

/// Initial volume estimate: per-voxel Σ w·s / Σ w over all slice samples
/// (normalized-scatter) with nearest-valid fill for uncovered voxels, or
/// all zeros.
Volume4D initial_estimate(const std::vector<ScatteredSlice>& slices,
                          const std::vector<SliceModel>& models, const Grid4D& grid,
                          InitKind kind, int threads = 1);

/// MAP reconstruction of the 4D volume from scattered slices.
/// conjugate-gradient mode solves (Σ Hᵀ W H + (alpha/2) LᵀL) x = Σ Hᵀ W s;
/// iterative-backprojection mode relaxes x ← x − step · gradient.
/// Throws std::invalid_argument when no slice has any valid pixel.
std::pair<Volume4D, ReconReport> reconstruct(const std::vector<ScatteredSlice>& slices,
                                             const Grid4D& grid, const PsfParams& psf,
                                             const ReconConfig& config);

/// Coverage bookkeeping for the 3D baseline.
struct CoverageMap {
    Grid4D grid;
    std::vector<std::uint8_t> covered;        // per 4D voxel
    std::vector<std::uint8_t> timepoint_flagged;  // timepoints with no slices

    double hole_fraction(int t, const Mask3D* mask = nullptr) const;
};

/// Single-step 3D linear interpolation baseline: each timepoint
/// reconstructed independently by trilinear scattered-data interpolation of
/// its motion-transformed slice samples. Zero-coverage voxels are filled
/// from the nearest covered voxel (in-mask when a mask is given) and
/// recorded in the coverage map; timepoints with no slices copy the nearest
/// reconstructed timepoint and are flagged.
std::pair<Volume4D, CoverageMap> interpolate_3d_baseline(
    const std::vector<ScatteredSlice>& slices, const Grid4D& grid,
    const Mask3D* mask = nullptr, int threads = 1);

}  // namespace recon4d
