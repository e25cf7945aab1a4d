#pragma once

#include <cstdint>
#include <vector>

#include "recon4d/forward_model.hpp"
#include "recon4d/volume.hpp"

namespace recon4d {

/// Deterministic RNG with fully specified output streams (mt19937_64 bits
/// shaped by hand), so seeded runs are reproducible across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller.
    double gauss();
    std::uint64_t next_u64();

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

enum class PhantomKind { nested_ellipsoids, checkerboard_ellipsoid };
enum class TrajectoryStyle { smooth_drift, burst, mixed };

PhantomKind parse_phantom_kind(const std::string& s);
TrajectoryStyle parse_trajectory_style(const std::string& s);
std::string to_string(PhantomKind k);
std::string to_string(TrajectoryStyle s);

/// Synthetic 4D phantom: labeled regions with per-region baseline intensity
/// and a sinusoidal temporal fluctuation. The effective period is snapped
/// to a whole number of cycles over the series so every voxel's temporal
/// mean equals its baseline exactly.
struct PhantomSpec {
    PhantomKind kind = PhantomKind::nested_ellipsoids;
    Grid4D grid;
    double fluct_amplitude = 0.02;  // fraction of baseline
    double fluct_period_s = 20.0;
    std::uint64_t seed = 0;

    /// Baseline intensity per region label (label 0 = background). Empty
    /// selects the built-in defaults for the phantom kind.
    std::vector<double> region_baselines;
};

struct Phantom {
    Volume4D series;
    std::vector<std::uint8_t> labels;  // per spatial voxel
    int n_regions = 0;
    double effective_period_s = 0.0;

    /// Support mask: every voxel with a non-background label.
    Mask3D mask() const;
};

Phantom generate_phantom(const PhantomSpec& spec);

/// Per-slice rigid motion over a whole series. Generated series are scaled
/// so each parameter attains its declared maximum magnitude exactly (unless
/// the maximum is zero).
struct TrajectorySpec {
    Vec3 max_translation_mm = Vec3::Zero();
    Vec3 max_rotation_deg = Vec3::Zero();
    TrajectoryStyle style = TrajectoryStyle::smooth_drift;
    int burst_start = -1;  // slice index; <0 centers the burst
    int burst_len = -1;    // slice count; <0 uses a third of the series
    std::uint64_t seed = 0;
    Vec3 center = Vec3::Zero();  // rotation center for all poses
};

std::vector<RigidTransform> generate_trajectory(const TrajectorySpec& spec, int n_slices);

/// Acquisition simulation settings. Slice geometry defaults to the grid's
/// in-plane spacing and slice thickness.
struct AcquisitionSpec {
    double noise_sigma = 0.0;  // additive Gaussian noise, intensity units
    int interleave = 1;
    bool fine_grid = false;  // evaluate the truth on a 2x finer spatial grid
    std::uint64_t seed = 0;
};

/// Simulate the acquisition of motion-scattered slices: forward-project the
/// truth at each pose and acquisition time, in interleaved order, and add
/// i.i.d. Gaussian noise. sigma_k is recorded truthfully on every slice
/// (1 when noise_sigma is 0). trajectory[g] is the pose of the g-th
/// acquired slice.
std::vector<ScatteredSlice> simulate_acquisition(const Volume4D& truth,
                                                 const std::vector<RigidTransform>& trajectory,
                                                 const PsfParams& psf,
                                                 const AcquisitionSpec& acq,
                                                 int threads = 1);

}  // namespace recon4d
