#include "recon4d/registration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "recon4d/parallel.hpp"

namespace recon4d {

void RegistrationConfig::validate() const {
    if (pyramid_levels < 1)
        throw std::invalid_argument("RegistrationConfig: pyramid_levels must be >= 1");
    if (interleave < 1)
        throw std::invalid_argument("RegistrationConfig: interleave must be >= 1");
    if (quiescence_window < 1)
        throw std::invalid_argument("RegistrationConfig: quiescence_window must be >= 1");
    if (max_eval < 1)
        throw std::invalid_argument("RegistrationConfig: max_eval must be >= 1");
}

// ---------------------------------------------------------------------------
// NCC
// ---------------------------------------------------------------------------

std::optional<double> ncc_or_nullopt(std::span<const double> a,
                                     std::span<const double> b,
                                     std::span<const std::uint8_t> mask) {
    if (a.size() != b.size()) return std::nullopt;
    if (!mask.empty() && mask.size() != a.size()) return std::nullopt;

    std::size_t n = 0;
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        ma += a[i];
        mb += b[i];
        ++n;
    }
    if (n < 2) return std::nullopt;
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);

    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        const double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

double ncc(std::span<const double> a, std::span<const double> b,
           std::span<const std::uint8_t> mask) {
    const auto r = ncc_or_nullopt(a, b, mask);
    if (!r)
        throw std::domain_error(
            "ncc: undefined metric (needs >= 2 masked samples with non-zero variance)");
    return *r;
}

// ---------------------------------------------------------------------------
// Quiescent target
// ---------------------------------------------------------------------------

std::pair<Volume3D, int> find_quiescent_target(const Volume4D& series, int window) {
    const int nt = series.grid.nt;
    if (window < 1 || window > nt)
        throw std::invalid_argument("find_quiescent_target: need 1 <= window <= nt");

    // Motion proxy: mean absolute difference between consecutive volumes.
    const std::size_t n3 = series.grid.space.n_voxels();
    std::vector<double> diff(static_cast<std::size_t>(std::max(0, nt - 1)), 0.0);
    for (int t = 0; t + 1 < nt; ++t) {
        const double* a = series.data.data() + n3 * static_cast<std::size_t>(t);
        const double* b = series.data.data() + n3 * static_cast<std::size_t>(t + 1);
        double s = 0.0;
        for (std::size_t i = 0; i < n3; ++i) s += std::abs(b[i] - a[i]);
        diff[static_cast<std::size_t>(t)] = s / static_cast<double>(n3);
    }

    int best_start = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int s = 0; s + window <= nt; ++s) {
        double score = 0.0;
        for (int t = s; t < s + window - 1; ++t) score += diff[static_cast<std::size_t>(t)];
        if (score < best_score) {
            best_score = score;
            best_start = s;
        }
    }

    Volume3D target(series.grid.space, 0.0);
    for (int t = best_start; t < best_start + window; ++t) {
        const double* src = series.data.data() + n3 * static_cast<std::size_t>(t);
        for (std::size_t i = 0; i < n3; ++i) target.data[i] += src[i];
    }
    for (double& v : target.data) v /= window;
    return {std::move(target), best_start};
}

// ---------------------------------------------------------------------------
// Pattern-search optimizer over 6 rigid parameters
// ---------------------------------------------------------------------------

namespace {

constexpr double kWorstScore = -2.0;

// (rx_deg, ry_deg, rz_deg, tx, ty, tz) about a fixed center.
using Params6 = std::array<double, 6>;

RigidTransform params_to_pose(const Params6& p, const Vec3& center) {
    return RigidTransform::from_degrees(p[0], p[1], p[2], p[3], p[4], p[5], center);
}

Params6 pose_to_params(const RigidTransform& t, const Vec3& center) {
    // Re-express the same world map about `center`.
    const Mat3 r = t.rotation();
    const Vec3 k = t.center + t.translation - r * t.center;  // p -> R p + k
    const Vec3 trans = k - center + r * center;
    RigidTransform about;
    about.rx = t.rx;
    about.ry = t.ry;
    about.rz = t.rz;
    const Vec3 deg = about.angles_deg();
    return {deg.x(), deg.y(), deg.z(), trans.x(), trans.y(), trans.z()};
}

struct SearchSettings {
    double step_deg, step_mm, final_deg, final_mm;
    int budget;
};

// Greedy coordinate search with halving steps. Only improving moves are
// accepted, so the returned score is never below score(start).
template <typename ScoreFn>
std::pair<Params6, double> pattern_search(const Params6& start, ScoreFn&& score,
                                          const SearchSettings& s) {
    Params6 best = start;
    double best_score = score(best);
    int evals = 1;
    double step_deg = s.step_deg, step_mm = s.step_mm;

    while (evals < s.budget &&
           (step_deg >= s.final_deg * 0.999 || step_mm >= s.final_mm * 0.999)) {
        bool improved = false;
        for (int axis = 0; axis < 6 && evals < s.budget; ++axis) {
            const double step = axis < 3 ? step_deg : step_mm;
            for (const double sign : {+1.0, -1.0}) {
                if (evals >= s.budget) break;
                Params6 cand = best;
                cand[static_cast<std::size_t>(axis)] += sign * step;
                const double cs = score(cand);
                ++evals;
                if (cs > best_score) {
                    best_score = cs;
                    best = cand;
                    improved = true;
                    break;  // keep walking this axis next sweep
                }
            }
        }
        if (!improved) {
            step_deg *= 0.5;
            step_mm *= 0.5;
        }
    }
    return {best, best_score};
}

// Resample `vol` at the transformed positions of reference-grid voxels and
// correlate with the reference values. `mask` lives on the reference grid.
std::optional<double> resample_ncc(const Volume3D& reference, const Volume3D& vol,
                                   const RigidTransform& pose, const Mask3D* mask) {
    const Grid3D& g = reference.grid;
    const std::size_t n = g.n_voxels();
    std::vector<double> a, b;
    a.reserve(n);
    b.reserve(n);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (mask && !mask->at(i, j, k)) continue;
                const Vec3 world = g.voxel_to_world(Vec3(i, j, k));
                const Vec3 moved = apply_transform(pose, world);
                bool inside = false;
                const double v =
                    sample_trilinear(vol, vol.grid.world_to_voxel(moved), &inside);
                if (!inside) continue;
                a.push_back(reference.at(i, j, k));
                b.push_back(v);
            }
    return ncc_or_nullopt(a, b);
}

}  // namespace

// ---------------------------------------------------------------------------
// Volume-to-volume registration
// ---------------------------------------------------------------------------

RegistrationResult register_volume(const Volume3D& moving, const Volume3D& target,
                                   const RegistrationConfig& config, const Mask3D* mask) {
    config.validate();
    const Vec3 center = target.grid.center_world();

    // Pyramid, coarsest last.
    std::vector<Volume3D> mov{moving}, tgt{target};
    std::vector<Mask3D> msk;
    if (mask) msk.push_back(*mask);
    for (int l = 1; l < config.pyramid_levels; ++l) {
        mov.push_back(downsample2(mov.back()));
        tgt.push_back(downsample2(tgt.back()));
        if (mask) msk.push_back(downsample2(msk.back()));
    }

    // The pose maps moving-space points into target space (the same
    // direction slice poses use). Symmetric score: average of the
    // target-grid pass, sampling the moving volume through the inverse, and
    // the moving-grid pass, sampling the target through the pose. The mask
    // lives on the target grid and restricts the first pass.
    auto score_at = [&](const Params6& p, int level) {
        const RigidTransform pose = params_to_pose(p, center);
        const Mask3D* m = mask ? &msk[static_cast<std::size_t>(level)] : nullptr;
        const auto fwd = resample_ncc(tgt[static_cast<std::size_t>(level)],
                                      mov[static_cast<std::size_t>(level)], invert(pose), m);
        const auto inv = resample_ncc(mov[static_cast<std::size_t>(level)],
                                      tgt[static_cast<std::size_t>(level)], pose, nullptr);
        if (!fwd && !inv) return kWorstScore;
        if (!fwd) return *inv;
        if (!inv) return *fwd;
        return 0.5 * (*fwd + *inv);
    };

    Params6 p{};  // identity
    double best = kWorstScore;
    const int budget_per_level = std::max(1, config.max_eval / config.pyramid_levels);
    for (int level = config.pyramid_levels - 1; level >= 0; --level) {
        SearchSettings s;
        // Coarse levels take the big steps; the finest level finishes at the
        // final step size.
        const double shrink = std::pow(2.0, config.pyramid_levels - 1 - level);
        s.step_deg = config.initial_step_deg / shrink;
        s.step_mm = config.initial_step_mm / shrink;
        s.final_deg = level == 0 ? config.final_step_deg : s.step_deg * 0.25;
        s.final_mm = level == 0 ? config.final_step_mm : s.step_mm * 0.25;
        s.budget = budget_per_level;
        auto [q, sc] = pattern_search(
            p, [&](const Params6& c) { return score_at(c, level); }, s);
        p = q;
        best = sc;
    }

    RegistrationResult out;
    out.pose = params_to_pose(p, center);
    out.score = best;
    const bool moved = !out.pose.is_identity(0.0);
    // A search that never left identity, or one whose best similarity is
    // indistinguishable from noise, is reported as a failure.
    out.warning = (!moved && best < 0.999) || best < 0.2;
    if (out.warning && best < 0.2) {
        out.pose = RigidTransform::identity();
        out.pose.center = center;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Hierarchical slice-to-volume registration
// ---------------------------------------------------------------------------

namespace {

// NCC between a set of slices' pixels and the target resampled at their
// motion-transformed positions. In-mask coverage is evaluated on the target
// grid.
std::optional<double> slices_ncc(const std::vector<const ScatteredSlice*>& group,
                                 const Volume3D& target, const RigidTransform& pose,
                                 const Mask3D* mask) {
    std::vector<double> a, b;
    const Mat3 r = pose.rotation();
    const Vec3 shift = pose.center + pose.translation;
    for (const ScatteredSlice* s : group) {
        const Vec3 plane_origin =
            target.grid.origin + Vec3(0.0, 0.0, s->slice_index * s->thickness);
        std::size_t px = 0;
        for (int v = 0; v < s->nv; ++v)
            for (int u = 0; u < s->nu; ++u, ++px) {
                const Vec3 native = plane_origin + Vec3(u * s->du, v * s->dv, 0.0);
                const Vec3 world = r * (native - pose.center) + shift;
                const Vec3 voxel = target.grid.world_to_voxel(world);
                if (mask) {
                    const int mi = static_cast<int>(std::lround(voxel.x()));
                    const int mj = static_cast<int>(std::lround(voxel.y()));
                    const int mk = static_cast<int>(std::lround(voxel.z()));
                    if (!mask->grid.contains(mi, mj, mk) || !mask->at(mi, mj, mk))
                        continue;
                }
                bool inside = false;
                const double t = sample_trilinear(target, voxel, &inside);
                if (!inside) continue;
                a.push_back(s->data[px]);
                b.push_back(t);
            }
    }
    return ncc_or_nullopt(a, b);
}

double in_mask_coverage(const ScatteredSlice& s, const Volume3D& target,
                        const RigidTransform& pose, const Mask3D* mask) {
    std::size_t in = 0;
    const Mat3 r = pose.rotation();
    const Vec3 shift = pose.center + pose.translation;
    const Vec3 plane_origin =
        target.grid.origin + Vec3(0.0, 0.0, s.slice_index * s.thickness);
    for (int v = 0; v < s.nv; ++v)
        for (int u = 0; u < s.nu; ++u) {
            const Vec3 native = plane_origin + Vec3(u * s.du, v * s.dv, 0.0);
            const Vec3 world = r * (native - pose.center) + shift;
            const Vec3 voxel = target.grid.world_to_voxel(world);
            const int mi = static_cast<int>(std::lround(voxel.x()));
            const int mj = static_cast<int>(std::lround(voxel.y()));
            const int mk = static_cast<int>(std::lround(voxel.z()));
            if (!target.grid.contains(mi, mj, mk)) continue;
            if (mask && !mask->at(mi, mj, mk)) continue;
            ++in;
        }
    return static_cast<double>(in) / static_cast<double>(s.n_pixels());
}

}  // namespace

std::vector<RegistrationResult> register_slices_hierarchical(
    const std::vector<ScatteredSlice>& slices, const Volume3D& target,
    const RegistrationConfig& config, const Mask3D* mask) {
    config.validate();
    const Vec3 center = target.grid.center_world();

    // Packets: slices of one excitation pass (same volume, same interleave
    // phase).
    std::map<std::pair<int, int>, std::vector<std::size_t>> packets;
    for (std::size_t i = 0; i < slices.size(); ++i)
        packets[{slices[i].volume_index, slices[i].slice_index % config.interleave}]
            .push_back(i);

    std::vector<RigidTransform> packet_pose(slices.size());
    for (std::size_t i = 0; i < slices.size(); ++i) packet_pose[i] = slices[i].pose;

    SearchSettings stage1;
    stage1.step_deg = config.initial_step_deg;
    stage1.step_mm = config.initial_step_mm;
    stage1.final_deg = config.final_step_deg;
    stage1.final_mm = config.final_step_mm;
    stage1.budget = config.max_eval;

    if (config.interleave > 1) {
        std::vector<std::vector<std::size_t>> packet_list;
        packet_list.reserve(packets.size());
        for (auto& [key, idxs] : packets) packet_list.push_back(idxs);

        parallel_chunks(packet_list.size(), config.threads,
                        [&](std::size_t b, std::size_t e, int) {
            for (std::size_t pi = b; pi < e; ++pi) {
                const auto& idxs = packet_list[pi];
                std::vector<const ScatteredSlice*> group;
                group.reserve(idxs.size());
                for (std::size_t i : idxs) group.push_back(&slices[i]);

                const Params6 start = pose_to_params(slices[idxs.front()].pose, center);
                auto [q, sc] = pattern_search(
                    start,
                    [&](const Params6& c) {
                        const auto s =
                            slices_ncc(group, target, params_to_pose(c, center), mask);
                        return s ? *s : kWorstScore;
                    },
                    stage1);
                const RigidTransform pose = params_to_pose(q, center);
                for (std::size_t i : idxs) packet_pose[i] = pose;
            }
        });
    }

    // Stage 2: per-slice refinement from the packet pose.
    std::vector<RegistrationResult> out(slices.size());
    SearchSettings stage2 = stage1;
    stage2.step_deg = config.initial_step_deg * 0.5;
    stage2.step_mm = config.initial_step_mm * 0.5;

    parallel_chunks(slices.size(), config.threads, [&](std::size_t b, std::size_t e, int) {
        for (std::size_t i = b; i < e; ++i) {
            const ScatteredSlice& sl = slices[i];
            RegistrationResult r;
            r.pose = packet_pose[i];

            const double coverage = in_mask_coverage(sl, target, r.pose, mask);
            if (coverage < config.min_coverage) {
                r.warning = true;  // unidentifiable, keep packet pose
                const auto s = slices_ncc({&sl}, target, r.pose, mask);
                r.score = s ? *s : kWorstScore;
                out[i] = r;
                continue;
            }

            const Params6 start = pose_to_params(r.pose, center);
            auto [q, sc] = pattern_search(
                start,
                [&](const Params6& c) {
                    const auto s = slices_ncc({&sl}, target, params_to_pose(c, center), mask);
                    return s ? *s : kWorstScore;
                },
                stage2);
            if (sc <= kWorstScore) {
                r.warning = true;  // metric undefined everywhere, fall back
                r.score = sc;
            } else {
                r.pose = params_to_pose(q, center);
                r.score = sc;
            }
            out[i] = r;
        }
    });
    return out;
}

}  // namespace recon4d
