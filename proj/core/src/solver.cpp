#include "recon4d/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "recon4d/parallel.hpp"

namespace recon4d {

SolverKind parse_solver_kind(const std::string& s) {
    if (s == "conjugate-gradient") return SolverKind::conjugate_gradient;
    if (s == "iterative-backprojection") return SolverKind::iterative_backprojection;
    throw std::invalid_argument("unknown solver kind: " + s);
}

InitKind parse_init_kind(const std::string& s) {
    if (s == "normalized-scatter") return InitKind::normalized_scatter;
    if (s == "zeros") return InitKind::zeros;
    throw std::invalid_argument("unknown init kind: " + s);
}

std::string to_string(SolverKind k) {
    return k == SolverKind::conjugate_gradient ? "conjugate-gradient"
                                               : "iterative-backprojection";
}

std::string to_string(InitKind k) {
    return k == InitKind::normalized_scatter ? "normalized-scatter" : "zeros";
}

void ReconConfig::validate() const {
    if (!(alpha >= 0.0)) throw std::invalid_argument("ReconConfig: alpha must be >= 0");
    if (max_iters < 1) throw std::invalid_argument("ReconConfig: max_iters must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("ReconConfig: tol must be > 0");
    if (!(step_size > 0.0)) throw std::invalid_argument("ReconConfig: step_size must be > 0");
}

// ---------------------------------------------------------------------------
// First-order Tikhonov regularizer
// ---------------------------------------------------------------------------

namespace {

struct AxisWeights {
    double wx, wy, wz, wt;  // 1 / h² per axis
};

AxisWeights axis_weights(const Grid4D& g, double time_scale) {
    const double ht = g.tr * time_scale;
    return {1.0 / (g.space.dx * g.space.dx), 1.0 / (g.space.dy * g.space.dy),
            1.0 / (g.space.dz * g.space.dz), 1.0 / (ht * ht)};
}

}  // namespace

double regularizer_value(const Volume4D& x, double time_scale) {
    const Grid4D& g = x.grid;
    const AxisWeights w = axis_weights(g, time_scale);
    const int nx = g.nx(), ny = g.ny(), nz = g.nz(), nt = g.nt;
    const std::size_t sx = 1;
    const std::size_t sy = static_cast<std::size_t>(nx);
    const std::size_t sz = sy * ny;
    const std::size_t st = sz * nz;

    double sum = 0.0;
    for (int t = 0; t < nt; ++t)
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j) {
                const std::size_t row = sy * j + sz * k + st * t;
                for (int i = 0; i < nx; ++i) {
                    const std::size_t idx = row + i;
                    const double v = x.data[idx];
                    if (i + 1 < nx) { const double d = x.data[idx + sx] - v; sum += w.wx * d * d; }
                    if (j + 1 < ny) { const double d = x.data[idx + sy] - v; sum += w.wy * d * d; }
                    if (k + 1 < nz) { const double d = x.data[idx + sz] - v; sum += w.wz * d * d; }
                    if (t + 1 < nt) { const double d = x.data[idx + st] - v; sum += w.wt * d * d; }
                }
            }
    return sum;
}

void apply_regularizer_normal(const Volume4D& x, double time_scale, Volume4D& out,
                              bool accumulate) {
    const Grid4D& g = x.grid;
    if (out.grid.n_voxels() != g.n_voxels())
        throw std::invalid_argument("apply_regularizer_normal: grid mismatch");
    if (!accumulate) std::fill(out.data.begin(), out.data.end(), 0.0);

    const AxisWeights w = axis_weights(g, time_scale);
    const int nx = g.nx(), ny = g.ny(), nz = g.nz(), nt = g.nt;
    const std::size_t sy = static_cast<std::size_t>(nx);
    const std::size_t sz = sy * ny;
    const std::size_t st = sz * nz;

    // Lᵀ L: for every forward difference d = x[n+1] - x[n], add -w·d to the
    // low site and +w·d to the high site.
    for (int t = 0; t < nt; ++t)
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j) {
                const std::size_t row = sy * j + sz * k + st * t;
                for (int i = 0; i < nx; ++i) {
                    const std::size_t idx = row + i;
                    const double v = x.data[idx];
                    if (i + 1 < nx) {
                        const double d = w.wx * (x.data[idx + 1] - v);
                        out.data[idx] -= d;
                        out.data[idx + 1] += d;
                    }
                    if (j + 1 < ny) {
                        const double d = w.wy * (x.data[idx + sy] - v);
                        out.data[idx] -= d;
                        out.data[idx + sy] += d;
                    }
                    if (k + 1 < nz) {
                        const double d = w.wz * (x.data[idx + sz] - v);
                        out.data[idx] -= d;
                        out.data[idx + sz] += d;
                    }
                    if (t + 1 < nt) {
                        const double d = w.wt * (x.data[idx + st] - v);
                        out.data[idx] -= d;
                        out.data[idx + st] += d;
                    }
                }
            }
}

// ---------------------------------------------------------------------------
// Objective and gradient
// ---------------------------------------------------------------------------

namespace {

double grid_time_scale(const Grid4D& g) { return time_scale_factor(g.space.dz, g.tr); }

// Per-slice weighted squared residual over valid pixels.
double data_term(const std::vector<ScatteredSlice>& slices,
                 const std::vector<SliceProjection>& projs) {
    double sum = 0.0;
    for (std::size_t s = 0; s < slices.size(); ++s) {
        const double w = 1.0 / (slices[s].sigma * slices[s].sigma);
        double acc = 0.0;
        for (std::size_t p = 0; p < projs[s].values.size(); ++p) {
            if (!projs[s].valid(p)) continue;
            const double r = projs[s].values[p] - slices[s].data[p];
            acc += r * r;
        }
        sum += w * acc;
    }
    return sum;
}

}  // namespace

ObjectiveParts objective(const Volume4D& x, const std::vector<ScatteredSlice>& slices,
                         const std::vector<SliceModel>& models, double alpha,
                         int threads) {
    if (slices.size() != models.size())
        throw std::invalid_argument("objective: slices/models size mismatch");
    const auto projs = forward_project_all(x, models, threads);
    ObjectiveParts parts;
    parts.data = data_term(slices, projs);
    parts.reg = regularizer_value(x, grid_time_scale(x.grid));
    parts.total = parts.data + 0.5 * alpha * parts.reg;
    return parts;
}

Volume4D objective_gradient(const Volume4D& x, const std::vector<ScatteredSlice>& slices,
                            const std::vector<SliceModel>& models, double alpha,
                            int threads) {
    if (slices.size() != models.size())
        throw std::invalid_argument("objective_gradient: slices/models size mismatch");

    const auto projs = forward_project_all(x, models, threads);
    std::vector<std::vector<double>> residuals(slices.size());
    std::vector<double> scale(slices.size());
    for (std::size_t s = 0; s < slices.size(); ++s) {
        residuals[s].assign(projs[s].values.size(), 0.0);
        for (std::size_t p = 0; p < projs[s].values.size(); ++p)
            if (projs[s].valid(p))
                residuals[s][p] = projs[s].values[p] - slices[s].data[p];
        scale[s] = 2.0 / (slices[s].sigma * slices[s].sigma);
    }

    Volume4D grad = adjoint_project_all(residuals, models, x.grid, scale, threads);
    if (alpha != 0.0) {
        Volume4D reg(x.grid, 0.0);
        apply_regularizer_normal(x, grid_time_scale(x.grid), reg);
        for (std::size_t i = 0; i < grad.data.size(); ++i)
            grad.data[i] += alpha * reg.data[i];
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Initial estimate
// ---------------------------------------------------------------------------

Volume4D initial_estimate(const std::vector<ScatteredSlice>& slices,
                          const std::vector<SliceModel>& models, const Grid4D& grid,
                          InitKind kind, int threads) {
    if (kind == InitKind::zeros) return Volume4D(grid, 0.0);
    if (slices.size() != models.size())
        throw std::invalid_argument("initial_estimate: slices/models size mismatch");

    constexpr double kEps = 1e-12;
    const int chunks = threads <= 1 ? 1 : threads;
    std::vector<Volume4D> num(static_cast<std::size_t>(chunks), Volume4D(grid, 0.0));
    std::vector<Volume4D> den(static_cast<std::size_t>(chunks), Volume4D(grid, 0.0));

    parallel_chunks(models.size(), threads, [&](std::size_t b, std::size_t e, int c) {
        Volume4D& n = num[static_cast<std::size_t>(c)];
        Volume4D& d = den[static_cast<std::size_t>(c)];
        for (std::size_t s = b; s < e; ++s) {
            const SliceModel& m = models[s];
            const Mat3 r = m.pose.rotation();
            const Vec3 shift = m.pose.center + m.pose.translation;
            std::size_t px = 0;
            for (int v = 0; v < m.nv; ++v)
                for (int u = 0; u < m.nu; ++u, ++px) {
                    const double value = slices[s].data[px];
                    const Vec3 world =
                        r * (m.native_point(u, v) - m.pose.center) + shift;
                    for_each_footprint_entry(
                        m.psf, grid, world, m.time_s,
                        [&](int i, int j, int k, int t, double w) {
                            const std::size_t idx = grid.index(i, j, k, t);
                            n.data[idx] += w * value;
                            d.data[idx] += w;
                        });
                }
        }
    });

    for (int c = 1; c < chunks; ++c)
        for (std::size_t i = 0; i < num[0].data.size(); ++i) {
            num[0].data[i] += num[static_cast<std::size_t>(c)].data[i];
            den[0].data[i] += den[static_cast<std::size_t>(c)].data[i];
        }

    Volume4D out(grid, 0.0);
    const std::size_t n3 = grid.space.n_voxels();
    bool any_covered_somewhere = false;
    std::vector<std::uint8_t> t_covered(static_cast<std::size_t>(grid.nt), 0);
    for (int t = 0; t < grid.nt; ++t) {
        Volume3D plane(grid.space, 0.0);
        std::vector<std::uint8_t> covered(n3, 0);
        bool any = false;
        for (std::size_t i = 0; i < n3; ++i) {
            const std::size_t idx = n3 * static_cast<std::size_t>(t) + i;
            if (den[0].data[idx] > kEps) {
                plane.data[i] = num[0].data[idx] / den[0].data[idx];
                covered[i] = 1;
                any = true;
            }
        }
        if (any) fill_from_nearest(plane, covered);
        t_covered[static_cast<std::size_t>(t)] = any ? 1 : 0;
        any_covered_somewhere = any_covered_somewhere || any;
        out.set_timepoint(t, plane);
    }

    // Timepoints with no coverage copy the nearest covered timepoint.
    if (any_covered_somewhere) {
        for (int t = 0; t < grid.nt; ++t) {
            if (t_covered[static_cast<std::size_t>(t)]) continue;
            int best = -1, best_d = grid.nt + 1;
            for (int t2 = 0; t2 < grid.nt; ++t2)
                if (t_covered[static_cast<std::size_t>(t2)] && std::abs(t2 - t) < best_d) {
                    best_d = std::abs(t2 - t);
                    best = t2;
                }
            out.set_timepoint(t, out.timepoint(best));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

namespace {

// Σ_k Hᵀ_k W_k (residual_k) for residual = per-slice pixel vectors.
Volume4D weighted_adjoint(const std::vector<std::vector<double>>& residuals,
                          const std::vector<SliceModel>& models, const Grid4D& grid,
                          double extra_scale, int threads) {
    std::vector<double> scale(models.size());
    for (std::size_t s = 0; s < models.size(); ++s)
        scale[s] = extra_scale * models[s].inv_sigma_sq;
    return adjoint_project_all(residuals, models, grid, scale, threads);
}

// A x = Σ Hᵀ W H x + (alpha/2) LᵀL x
Volume4D apply_normal_operator(const Volume4D& x, const std::vector<SliceModel>& models,
                               double alpha, double time_scale, int threads) {
    const auto projs = forward_project_all(x, models, threads);
    std::vector<std::vector<double>> vals(models.size());
    for (std::size_t s = 0; s < models.size(); ++s) vals[s] = projs[s].values;
    Volume4D out = weighted_adjoint(vals, models, x.grid, 1.0, threads);
    if (alpha != 0.0) {
        Volume4D reg(x.grid, 0.0);
        apply_regularizer_normal(x, time_scale, reg);
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] += 0.5 * alpha * reg.data[i];
    }
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void record(ReconReport& rep, const ObjectiveParts& f) {
    rep.data_terms.push_back(f.data);
    rep.reg_terms.push_back(f.reg);
    rep.totals.push_back(f.total);
}

bool relative_change_below(double prev, double next, double tol) {
    const double scale = std::max({std::abs(prev), std::abs(next), 1e-300});
    return std::abs(prev - next) / scale < tol;
}

}  // namespace

std::pair<Volume4D, ReconReport> reconstruct(const std::vector<ScatteredSlice>& slices,
                                             const Grid4D& grid, const PsfParams& psf,
                                             const ReconConfig& config) {
    config.validate();
    grid.validate();
    if (slices.empty())
        throw std::invalid_argument("reconstruct: no slices supplied");

    const int threads = std::max(1, config.threads);
    const auto models = build_slice_models(slices, grid, psf, threads);

    bool any_valid = false;
    for (const auto& m : models)
        for (double w : m.weight_sum)
            if (w > kWeightEps) { any_valid = true; break; }
    if (!any_valid)
        throw std::invalid_argument(
            "reconstruct: no slice has a valid pixel on this grid");

    const double time_scale = grid_time_scale(grid);
    Volume4D x = initial_estimate(slices, models, grid, config.init, threads);

    ReconReport rep;
    ObjectiveParts f = objective(x, slices, models, config.alpha, threads);
    record(rep, f);

    if (config.kind == SolverKind::conjugate_gradient) {
        // b = Σ Hᵀ W s
        std::vector<std::vector<double>> obs(slices.size());
        for (std::size_t s = 0; s < slices.size(); ++s) obs[s] = slices[s].data;
        const Volume4D b = weighted_adjoint(obs, models, grid, 1.0, threads);

        Volume4D ax = apply_normal_operator(x, models, config.alpha, time_scale, threads);
        std::vector<double> r(b.data.size());
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = b.data[i] - ax.data[i];
        std::vector<double> p = r;
        double rr = dot(r, r);

        for (int it = 0; it < config.max_iters; ++it) {
            if (rr == 0.0) { rep.converged = true; break; }
            Volume4D pv(grid);
            pv.data = p;
            const Volume4D ap =
                apply_normal_operator(pv, models, config.alpha, time_scale, threads);
            const double pap = dot(p, ap.data);
            if (!(pap > 0.0)) {
                rep.note = "stopped: curvature vanished";
                break;
            }
            const double step = rr / pap;
            Volume4D x_prev = x;
            for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += step * p[i];

            const ObjectiveParts f_new =
                objective(x, slices, models, config.alpha, threads);
            if (f_new.total > f.total) {
                // Roundoff floor: keep the previous iterate, stop.
                x = std::move(x_prev);
                rep.note = "stopped: objective floor reached";
                break;
            }
            record(rep, f_new);
            ++rep.iterations;

            if (relative_change_below(f.total, f_new.total, config.tol)) {
                f = f_new;
                rep.converged = true;
                break;
            }
            f = f_new;

            for (std::size_t i = 0; i < r.size(); ++i) r[i] -= step * ap.data[i];
            const double rr_new = dot(r, r);
            const double beta = rr_new / rr;
            rr = rr_new;
            for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
        }
    } else {
        int rises = 0;
        for (int it = 0; it < config.max_iters; ++it) {
            const Volume4D g =
                objective_gradient(x, slices, models, config.alpha, threads);
            for (std::size_t i = 0; i < x.data.size(); ++i)
                x.data[i] -= config.step_size * g.data[i];

            const ObjectiveParts f_new =
                objective(x, slices, models, config.alpha, threads);
            record(rep, f_new);
            ++rep.iterations;

            if (f_new.total > f.total) {
                if (++rises >= 3) {
                    rep.diverged = true;
                    rep.note = "stopped: objective increased 3 consecutive iterations "
                               "(reduce step_size)";
                    f = f_new;
                    break;
                }
            } else {
                rises = 0;
                if (relative_change_below(f.total, f_new.total, config.tol)) {
                    f = f_new;
                    rep.converged = true;
                    break;
                }
            }
            f = f_new;
        }
    }
    return {std::move(x), std::move(rep)};
}

// ---------------------------------------------------------------------------
// 3D linear interpolation baseline
// ---------------------------------------------------------------------------

double CoverageMap::hole_fraction(int t, const Mask3D* mask) const {
    const std::size_t n3 = grid.space.n_voxels();
    std::size_t total = 0, holes = 0;
    for (std::size_t i = 0; i < n3; ++i) {
        if (mask && !mask->data[i]) continue;
        ++total;
        if (!covered[n3 * static_cast<std::size_t>(t) + i]) ++holes;
    }
    return total == 0 ? 0.0 : static_cast<double>(holes) / static_cast<double>(total);
}

std::pair<Volume4D, CoverageMap> interpolate_3d_baseline(
    const std::vector<ScatteredSlice>& slices, const Grid4D& grid, const Mask3D* mask,
    int threads) {
    grid.validate();
    constexpr double kEps = 1e-12;

    CoverageMap cov;
    cov.grid = grid;
    cov.covered.assign(grid.n_voxels(), 0);
    cov.timepoint_flagged.assign(static_cast<std::size_t>(grid.nt), 0);

    std::vector<std::vector<const ScatteredSlice*>> by_volume(
        static_cast<std::size_t>(grid.nt));
    for (const ScatteredSlice& s : slices)
        if (s.volume_index >= 0 && s.volume_index < grid.nt)
            by_volume[static_cast<std::size_t>(s.volume_index)].push_back(&s);

    Volume4D out(grid, 0.0);
    const std::size_t n3 = grid.space.n_voxels();

    parallel_chunks(static_cast<std::size_t>(grid.nt), threads,
                    [&](std::size_t tb, std::size_t te, int) {
        for (std::size_t tv = tb; tv < te; ++tv) {
            const int t = static_cast<int>(tv);
            if (by_volume[tv].empty()) {
                cov.timepoint_flagged[tv] = 1;
                continue;
            }
            Volume3D num(grid.space, 0.0), den(grid.space, 0.0);
            for (const ScatteredSlice* s : by_volume[tv]) {
                const Mat3 r = s->pose.rotation();
                const Vec3 shift = s->pose.center + s->pose.translation;
                const Vec3 plane_origin =
                    grid.space.origin + Vec3(0.0, 0.0, s->slice_index * s->thickness);
                std::size_t px = 0;
                for (int v = 0; v < s->nv; ++v)
                    for (int u = 0; u < s->nu; ++u, ++px) {
                        const Vec3 native = plane_origin + Vec3(u * s->du, v * s->dv, 0.0);
                        const Vec3 world = r * (native - s->pose.center) + shift;
                        const Vec3 c = grid.space.world_to_voxel(world);
                        const int i0 = static_cast<int>(std::floor(c.x()));
                        const int j0 = static_cast<int>(std::floor(c.y()));
                        const int k0 = static_cast<int>(std::floor(c.z()));
                        const double fx = c.x() - i0, fy = c.y() - j0, fz = c.z() - k0;
                        const double value = s->data[px];
                        for (int dk = 0; dk < 2; ++dk)
                            for (int dj = 0; dj < 2; ++dj)
                                for (int di = 0; di < 2; ++di) {
                                    const int ii = i0 + di, jj = j0 + dj, kk = k0 + dk;
                                    if (!grid.space.contains(ii, jj, kk)) continue;
                                    const double w = (di ? fx : 1.0 - fx) *
                                                     (dj ? fy : 1.0 - fy) *
                                                     (dk ? fz : 1.0 - fz);
                                    if (w <= 0.0) continue;
                                    const std::size_t idx = grid.space.index(ii, jj, kk);
                                    num.data[idx] += w * value;
                                    den.data[idx] += w;
                                }
                    }
            }
            Volume3D plane(grid.space, 0.0);
            std::vector<std::uint8_t> covered(n3, 0);
            bool any = false;
            for (std::size_t i = 0; i < n3; ++i) {
                if (den.data[i] > kEps) {
                    plane.data[i] = num.data[i] / den.data[i];
                    covered[i] = 1;
                    any = true;
                }
            }
            if (any) fill_from_nearest(plane, covered, mask);
            else cov.timepoint_flagged[tv] = 1;
            std::copy(covered.begin(), covered.end(),
                      cov.covered.begin() + static_cast<std::ptrdiff_t>(n3 * tv));
            out.set_timepoint(t, plane);
        }
    });

    // Timepoints with no usable slices copy the nearest reconstructed one.
    for (int t = 0; t < grid.nt; ++t) {
        if (!cov.timepoint_flagged[static_cast<std::size_t>(t)]) continue;
        int best = -1, best_d = grid.nt + 1;
        for (int t2 = 0; t2 < grid.nt; ++t2) {
            if (cov.timepoint_flagged[static_cast<std::size_t>(t2)]) continue;
            if (std::abs(t2 - t) < best_d) { best_d = std::abs(t2 - t); best = t2; }
        }
        if (best >= 0) out.set_timepoint(t, out.timepoint(best));
    }
    return {std::move(out), std::move(cov)};
}

}  // namespace recon4d
