#include "recon4d/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "recon4d/parallel.hpp"

namespace recon4d {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

// ---------------------------------------------------------------------------
// Rng (splitmix64 core, hand-shaped outputs)
// ---------------------------------------------------------------------------

std::uint64_t Rng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::gauss() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    have_spare_ = true;
    return r * std::cos(kTwoPi * u2);
}

// ---------------------------------------------------------------------------
// Enum parsing
// ---------------------------------------------------------------------------

PhantomKind parse_phantom_kind(const std::string& s) {
    if (s == "nested-ellipsoids") return PhantomKind::nested_ellipsoids;
    if (s == "checkerboard-plus-ellipsoid") return PhantomKind::checkerboard_ellipsoid;
    throw std::invalid_argument("unknown phantom kind: " + s);
}

TrajectoryStyle parse_trajectory_style(const std::string& s) {
    if (s == "smooth-drift") return TrajectoryStyle::smooth_drift;
    if (s == "burst") return TrajectoryStyle::burst;
    if (s == "mixed") return TrajectoryStyle::mixed;
    throw std::invalid_argument("unknown trajectory style: " + s);
}

std::string to_string(PhantomKind k) {
    return k == PhantomKind::nested_ellipsoids ? "nested-ellipsoids"
                                               : "checkerboard-plus-ellipsoid";
}

std::string to_string(TrajectoryStyle s) {
    switch (s) {
        case TrajectoryStyle::smooth_drift: return "smooth-drift";
        case TrajectoryStyle::burst: return "burst";
        default: return "mixed";
    }
}

// ---------------------------------------------------------------------------
// Phantom generation
// ---------------------------------------------------------------------------

namespace {

struct Ellipsoid {
    Vec3 center;      // fractional offset of the grid extent
    Vec3 semi_axes;   // fraction of the grid extent
    std::uint8_t label;
};

bool inside(const Ellipsoid& e, const Vec3& p_mm, const Vec3& extent, const Vec3& mid) {
    const Vec3 c = mid + Vec3(e.center.x() * extent.x(), e.center.y() * extent.y(),
                              e.center.z() * extent.z());
    const Vec3 a(e.semi_axes.x() * extent.x(), e.semi_axes.y() * extent.y(),
                 e.semi_axes.z() * extent.z());
    const Vec3 d = p_mm - c;
    const double q = d.x() * d.x() / (a.x() * a.x()) + d.y() * d.y() / (a.y() * a.y()) +
                     d.z() * d.z() / (a.z() * a.z());
    return q <= 1.0;
}

// Snap the fluctuation to a whole number of cycles over the series so the
// temporal mean per voxel is exactly the baseline, preferring cycle counts
// that also make the sampled variance exact.
int pick_cycles(int nt, double tr, double period_s) {
    if (nt < 2) return 0;
    int c0 = std::max(1, static_cast<int>(std::lround(nt * tr / period_s)));
    auto ok_mean = [&](int c) { return c > 0 && c % nt != 0; };
    auto ok_var = [&](int c) { return ok_mean(c) && (2 * c) % nt != 0; };
    for (int d = 0; d <= nt; ++d) {
        if (ok_var(c0 + d)) return c0 + d;
        if (c0 - d > 0 && ok_var(c0 - d)) return c0 - d;
    }
    for (int d = 0; d <= nt; ++d) {
        if (ok_mean(c0 + d)) return c0 + d;
        if (c0 - d > 0 && ok_mean(c0 - d)) return c0 - d;
    }
    return 0;
}

}  // namespace

Phantom generate_phantom(const PhantomSpec& spec) {
    spec.grid.validate();
    if (!(spec.fluct_amplitude >= 0.0))
        throw std::invalid_argument("generate_phantom: amplitude must be >= 0");

    const Grid3D& g = spec.grid.space;
    const Vec3 extent(g.nx * g.dx, g.ny * g.dy, g.nz * g.dz);
    const Vec3 mid = g.center_world();

    Phantom out;
    out.labels.assign(g.n_voxels(), 0);

    std::vector<double> baselines;
    if (spec.kind == PhantomKind::nested_ellipsoids) {
        // Outer hull plus off-axis internal structures; the asymmetric blobs
        // make all six pose parameters identifiable.
        const std::vector<Ellipsoid> shapes = {
            {{0.00, 0.00, 0.00}, {0.42, 0.40, 0.40}, 1},
            {{0.03, -0.02, 0.00}, {0.28, 0.24, 0.26}, 2},
            {{-0.10, 0.08, 0.05}, {0.10, 0.09, 0.11}, 3},
            {{0.14, 0.10, -0.08}, {0.07, 0.06, 0.07}, 4},
        };
        baselines = {0.0, 100.0, 140.0, 60.0, 180.0};
        out.n_regions = 4;
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    const Vec3 p = g.voxel_to_world(Vec3(i, j, k));
                    std::uint8_t label = 0;
                    for (const auto& e : shapes)
                        if (inside(e, p, extent, mid)) label = e.label;
                    out.labels[g.index(i, j, k)] = label;
                }
    } else {
        // Ellipsoid hull filled with a 3D checkerboard.
        const Ellipsoid hull{{0.0, 0.0, 0.0}, {0.42, 0.40, 0.40}, 1};
        baselines = {0.0, 80.0, 150.0};
        out.n_regions = 2;
        const int cx = std::max(2, g.nx / 8), cy = std::max(2, g.ny / 8),
                  cz = std::max(1, g.nz / 6);
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    const Vec3 p = g.voxel_to_world(Vec3(i, j, k));
                    if (!inside(hull, p, extent, mid)) continue;
                    const int parity = (i / cx + j / cy + k / cz) % 2;
                    out.labels[g.index(i, j, k)] = static_cast<std::uint8_t>(1 + parity);
                }
    }
    if (!spec.region_baselines.empty()) {
        if (spec.region_baselines.size() < baselines.size())
            throw std::invalid_argument(
                "generate_phantom: region_baselines must cover every label");
        baselines = spec.region_baselines;
    }

    const int cycles = pick_cycles(spec.grid.nt, spec.grid.tr, spec.fluct_period_s);
    out.effective_period_s =
        cycles > 0 ? spec.grid.nt * spec.grid.tr / cycles : 0.0;

    Rng rng(spec.seed);
    std::vector<double> phase(baselines.size(), 0.0);
    for (std::size_t r = 1; r < phase.size(); ++r) phase[r] = rng.uniform(0.0, kTwoPi);

    out.series = Volume4D(spec.grid, 0.0);
    const std::size_t n3 = g.n_voxels();
    for (int t = 0; t < spec.grid.nt; ++t) {
        const double angle0 = cycles > 0 ? kTwoPi * cycles * t / spec.grid.nt : 0.0;
        double* dst = out.series.data.data() + n3 * static_cast<std::size_t>(t);
        for (std::size_t i = 0; i < n3; ++i) {
            const std::uint8_t label = out.labels[i];
            const double base = baselines[label];
            const double fluct =
                (label != 0 && cycles > 0)
                    ? spec.fluct_amplitude * std::sin(angle0 + phase[label])
                    : 0.0;
            dst[i] = base * (1.0 + fluct);
        }
    }
    return out;
}

Mask3D Phantom::mask() const {
    Mask3D m(series.grid.space, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) m.data[i] = labels[i] != 0;
    return m;
}

// ---------------------------------------------------------------------------
// Trajectory generation
// ---------------------------------------------------------------------------

namespace {

// Catmull-Rom through K control values sampled at n points, ends clamped.
std::vector<double> spline_series(const std::vector<double>& ctrl, int n) {
    const int kc = static_cast<int>(ctrl.size());
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    if (kc == 1) {
        std::fill(out.begin(), out.end(), ctrl[0]);
        return out;
    }
    auto at = [&](int i) { return ctrl[static_cast<std::size_t>(std::clamp(i, 0, kc - 1))]; };
    for (int t = 0; t < n; ++t) {
        const double s = n > 1 ? static_cast<double>(t) * (kc - 1) / (n - 1) : 0.0;
        const int seg = std::min(static_cast<int>(s), kc - 2);
        const double u = s - seg;
        const double p0 = at(seg - 1), p1 = at(seg), p2 = at(seg + 1), p3 = at(seg + 2);
        out[static_cast<std::size_t>(t)] =
            0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u +
                   (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
    }
    return out;
}

std::vector<double> burst_series(int n, int b0, int blen, double sign) {
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int t = b0; t < b0 + blen && t < n; ++t) {
        if (t < 0) continue;
        const double u = (t - b0 + 0.5) / blen;
        out[static_cast<std::size_t>(t)] = sign * 0.5 * (1.0 - std::cos(kTwoPi * u));
    }
    return out;
}

void rescale_to_max(std::vector<double>& v, double target_max) {
    if (target_max <= 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        return;
    }
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    if (m == 0.0) return;
    const double s = target_max / m;
    for (double& x : v) x *= s;
}

}  // namespace

std::vector<RigidTransform> generate_trajectory(const TrajectorySpec& spec, int n_slices) {
    if (n_slices < 1)
        throw std::invalid_argument("generate_trajectory: n_slices must be >= 1");

    Rng rng(spec.seed);
    const int b0 = spec.burst_start >= 0 ? spec.burst_start : n_slices / 3;
    const int blen = spec.burst_len > 0 ? spec.burst_len : std::max(1, n_slices / 3);

    // Parameter order matches the pose CSV: rx, ry, rz, tx, ty, tz.
    const double maxima[6] = {spec.max_rotation_deg.x(), spec.max_rotation_deg.y(),
                              spec.max_rotation_deg.z(), spec.max_translation_mm.x(),
                              spec.max_translation_mm.y(), spec.max_translation_mm.z()};

    std::array<std::vector<double>, 6> series;
    for (int q = 0; q < 6; ++q) {
        std::vector<double> s;
        switch (spec.style) {
            case TrajectoryStyle::smooth_drift: {
                std::vector<double> ctrl(5);
                for (double& c : ctrl) c = rng.uniform(-1.0, 1.0);
                s = spline_series(ctrl, n_slices);
                break;
            }
            case TrajectoryStyle::burst: {
                const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
                s = burst_series(n_slices, b0, blen, sign);
                break;
            }
            case TrajectoryStyle::mixed: {
                std::vector<double> ctrl(5);
                for (double& c : ctrl) c = rng.uniform(-1.0, 1.0);
                const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
                s = spline_series(ctrl, n_slices);
                const auto b = burst_series(n_slices, b0, blen, sign);
                for (int t = 0; t < n_slices; ++t)
                    s[static_cast<std::size_t>(t)] =
                        0.4 * s[static_cast<std::size_t>(t)] + b[static_cast<std::size_t>(t)];
                break;
            }
        }
        rescale_to_max(s, maxima[q]);
        series[static_cast<std::size_t>(q)] = std::move(s);
    }

    std::vector<RigidTransform> out(static_cast<std::size_t>(n_slices));
    for (int t = 0; t < n_slices; ++t) {
        const std::size_t ti = static_cast<std::size_t>(t);
        out[ti] = RigidTransform::from_degrees(series[0][ti], series[1][ti], series[2][ti],
                                               series[3][ti], series[4][ti], series[5][ti],
                                               spec.center);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Acquisition simulation
// ---------------------------------------------------------------------------

std::vector<ScatteredSlice> simulate_acquisition(const Volume4D& truth,
                                                 const std::vector<RigidTransform>& trajectory,
                                                 const PsfParams& psf,
                                                 const AcquisitionSpec& acq,
                                                 int threads) {
    const Grid4D& grid = truth.grid;
    grid.validate();
    psf.validate();
    if (acq.interleave < 1)
        throw std::invalid_argument("simulate_acquisition: interleave must be >= 1");
    const int nz = grid.nz(), nt = grid.nt;
    const std::size_t n_slices = static_cast<std::size_t>(nz) * nt;
    if (trajectory.size() != n_slices)
        throw std::invalid_argument("simulate_acquisition: trajectory must have nz*nt poses");

    // Interleaved acquisition order within each volume.
    std::vector<std::pair<int, int>> order;  // (volume, slice)
    order.reserve(n_slices);
    for (int t = 0; t < nt; ++t)
        for (int phase = 0; phase < acq.interleave; ++phase)
            for (int k = phase; k < nz; k += acq.interleave) order.emplace_back(t, k);

    const Volume4D source = acq.fine_grid ? refine_space2(truth) : truth;
    const double slice_dt = grid.tr / nz;

    std::vector<ScatteredSlice> slices(n_slices);
    parallel_chunks(n_slices, threads, [&](std::size_t b, std::size_t e, int) {
        for (std::size_t g = b; g < e; ++g) {
            const auto [t, k] = order[g];
            ScatteredSlice sl;
            sl.nu = grid.nx();
            sl.nv = grid.ny();
            sl.volume_index = t;
            sl.slice_index = k;
            sl.acq_time = static_cast<double>(g) * slice_dt;
            sl.pose = trajectory[g];
            sl.du = grid.space.dx;
            sl.dv = grid.space.dy;
            sl.thickness = grid.space.dz;
            sl.sigma = acq.noise_sigma > 0.0 ? acq.noise_sigma : 1.0;

            SliceModel m;
            m.nu = sl.nu;
            m.nv = sl.nv;
            m.pose = sl.pose;
            m.time_s = sl.acq_time;
            m.plane_origin =
                source.grid.space.origin + Vec3(0.0, 0.0, sl.slice_index * sl.thickness);
            m.eu = Vec3(sl.du, 0.0, 0.0);
            m.ev = Vec3(0.0, sl.dv, 0.0);
            m.psf = psf;

            SliceProjection proj = forward_project(source, m);
            sl.data = std::move(proj.values);

            if (acq.noise_sigma > 0.0) {
                Rng rng(acq.seed * 0x517cc1b727220a95ULL + g + 1);
                for (double& v : sl.data) v += acq.noise_sigma * rng.gauss();
            }
            slices[g] = std::move(sl);
        }
    });
    return slices;
}

}  // namespace recon4d
