#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "recon4d/forward_model.hpp"
#include "recon4d/volume.hpp"

namespace recon4d {

struct RegistrationConfig {
    int pyramid_levels = 2;
    int max_eval = 400;      // optimizer budget per registration target
    int interleave = 2;      // acquisition interleave factor
    int quiescence_window = 4;
    double initial_step_deg = 2.0;
    double initial_step_mm = 2.0;
    double final_step_deg = 0.1;
    double final_step_mm = 0.1;
    double min_coverage = 0.10;  // slices below this in-mask fraction keep the packet pose
    int threads = 1;

    void validate() const;
};

struct RegistrationResult {
    RigidTransform pose;
    double score = -1.0;  // NCC at the returned pose
    bool warning = false;
};

/// Pearson correlation of two masked sample sets, in [-1, 1].
/// Throws std::domain_error when fewer than 2 masked samples remain or
/// either side has zero variance (callers treat that as the worst score).
double ncc(std::span<const double> a, std::span<const double> b,
           std::span<const std::uint8_t> mask = {});

/// Non-throwing variant used inside optimizers.
std::optional<double> ncc_or_nullopt(std::span<const double> a,
                                     std::span<const double> b,
                                     std::span<const std::uint8_t> mask = {});

/// Find the `window` consecutive timepoints with the least summed
/// volume-to-volume mean absolute difference (a motion proxy that needs no
/// poses) and average them. Returns (target volume, window start index).
std::pair<Volume3D, int> find_quiescent_target(const Volume4D& series, int window);

/// 6-DOF rigid alignment of `moving` onto `target` maximizing symmetric NCC
/// (average of forward- and inverse-resampled scores) by coarse-to-fine
/// pattern search. Returns identity with a warning when the budget is
/// exhausted without improving on the identity pose.
RegistrationResult register_volume(const Volume3D& moving, const Volume3D& target,
                                   const RegistrationConfig& config,
                                   const Mask3D* mask = nullptr);

/// Two-stage interleave-aware slice-to-volume registration. Stage 1 jointly
/// registers each interleave packet (slices of one excitation pass, same
/// volume); stage 2 refines each slice from its packet pose. Slice poses in
/// `slices` carry the volume-level initialization. With interleave 1 the
/// packet stage is a no-op. Low-coverage slices keep the packet pose and
/// are flagged.
std::vector<RegistrationResult> register_slices_hierarchical(
    const std::vector<ScatteredSlice>& slices, const Volume3D& target,
    const RegistrationConfig& config, const Mask3D* mask = nullptr);

}  // namespace recon4d
