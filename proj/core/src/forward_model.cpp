#include "recon4d/forward_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "recon4d/parallel.hpp"

namespace recon4d {

std::size_t SliceProjection::n_valid() const {
    std::size_t n = 0;
    for (std::size_t p = 0; p < weight_sum.size(); ++p)
        if (valid(p)) ++n;
    return n;
}

std::vector<SliceModel> build_slice_models(const std::vector<ScatteredSlice>& slices,
                                           const Grid4D& grid, const PsfParams& psf,
                                           int threads,
                                           std::vector<std::string>* warnings) {
    grid.validate();
    psf.validate();
    for (const ScatteredSlice& sl : slices) {
        if (!(sl.sigma > 0.0))
            throw std::invalid_argument("build_slice_models: sigma_k must be > 0");
        if (!(sl.du > 0.0) || !(sl.dv > 0.0) || !(sl.thickness > 0.0))
            throw std::invalid_argument("build_slice_models: spacings must be > 0");
    }

    std::vector<SliceModel> models(slices.size());
    parallel_chunks(slices.size(), threads, [&](std::size_t b, std::size_t e, int) {
        for (std::size_t s = b; s < e; ++s) {
            const ScatteredSlice& sl = slices[s];
            SliceModel m;
            m.nu = sl.nu;
            m.nv = sl.nv;
            m.pose = sl.pose;
            m.time_s = sl.acq_time;
            m.plane_origin =
                grid.space.origin + Vec3(0.0, 0.0, sl.slice_index * sl.thickness);
            m.eu = Vec3(sl.du, 0.0, 0.0);
            m.ev = Vec3(0.0, sl.dv, 0.0);
            m.psf = psf;
            m.inv_sigma_sq = 1.0 / (sl.sigma * sl.sigma);

            // Cache footprint weight sums at this pose; they normalize both
            // the forward and the adjoint pass.
            m.weight_sum.assign(m.n_pixels(), 0.0);
            const Mat3 r = m.pose.rotation();
            const Vec3 shift = m.pose.center + m.pose.translation;
            std::size_t px = 0;
            for (int v = 0; v < m.nv; ++v) {
                for (int u = 0; u < m.nu; ++u, ++px) {
                    const Vec3 world = r * (m.native_point(u, v) - m.pose.center) + shift;
                    double sum = 0.0;
                    for_each_footprint_entry(psf, grid, world, m.time_s,
                                             [&](int, int, int, int, double w) { sum += w; });
                    m.weight_sum[px] = sum;
                }
            }
            models[s] = std::move(m);
        }
    });

    if (warnings) {
        for (std::size_t s = 0; s < models.size(); ++s) {
            const auto& ws = models[s].weight_sum;
            bool any = false;
            for (double w : ws)
                if (w > kWeightEps) { any = true; break; }
            if (!any)
                warnings->push_back("slice " + std::to_string(s) +
                                    " falls entirely outside the grid");
        }
    }
    return models;
}

SliceProjection forward_project(const Volume4D& x, const SliceModel& model) {
    SliceProjection out;
    out.nu = model.nu;
    out.nv = model.nv;
    out.values.assign(model.n_pixels(), 0.0);
    out.weight_sum.assign(model.n_pixels(), 0.0);

    const Grid4D& grid = x.grid;
    const Mat3 r = model.pose.rotation();
    const Vec3 shift = model.pose.center + model.pose.translation;
    const std::size_t nxy = static_cast<std::size_t>(grid.nx()) * grid.ny();
    const std::size_t nxyz = grid.space.n_voxels();

    std::size_t px = 0;
    for (int v = 0; v < model.nv; ++v) {
        for (int u = 0; u < model.nu; ++u, ++px) {
            const Vec3 world = r * (model.native_point(u, v) - model.pose.center) + shift;
            double num = 0.0, den = 0.0;
            for_each_footprint_entry(
                model.psf, grid, world, model.time_s,
                [&](int i, int j, int k, int t, double w) {
                    const std::size_t idx = static_cast<std::size_t>(i) +
                                            static_cast<std::size_t>(grid.nx()) * j +
                                            nxy * k + nxyz * t;
                    num += w * x.data[idx];
                    den += w;
                });
            out.weight_sum[px] = den;
            out.values[px] = den > kWeightEps ? num / den : 0.0;
        }
    }
    return out;
}

void adjoint_project_into(const std::vector<double>& residual,
                          const std::vector<double>& weight_sum,
                          const SliceModel& model, Volume4D& accum) {
    if (residual.size() != model.n_pixels() || weight_sum.size() != model.n_pixels())
        throw std::invalid_argument("adjoint_project: slice shape mismatch");

    const Grid4D& grid = accum.grid;
    const Mat3 r = model.pose.rotation();
    const Vec3 shift = model.pose.center + model.pose.translation;
    const std::size_t nxy = static_cast<std::size_t>(grid.nx()) * grid.ny();
    const std::size_t nxyz = grid.space.n_voxels();

    std::size_t px = 0;
    for (int v = 0; v < model.nv; ++v) {
        for (int u = 0; u < model.nu; ++u, ++px) {
            if (weight_sum[px] <= kWeightEps) continue;  // invalid pixel: zero residual
            const double scaled = residual[px] / weight_sum[px];
            if (scaled == 0.0) continue;
            const Vec3 world = r * (model.native_point(u, v) - model.pose.center) + shift;
            for_each_footprint_entry(
                model.psf, grid, world, model.time_s,
                [&](int i, int j, int k, int t, double w) {
                    const std::size_t idx = static_cast<std::size_t>(i) +
                                            static_cast<std::size_t>(grid.nx()) * j +
                                            nxy * k + nxyz * t;
                    accum.data[idx] += scaled * w;
                });
        }
    }
}

Volume4D adjoint_project(const std::vector<double>& residual, const SliceModel& model,
                         const Grid4D& grid) {
    Volume4D out(grid, 0.0);
    adjoint_project_into(residual, model.weight_sum, model, out);
    return out;
}

std::vector<SliceProjection> forward_project_all(const Volume4D& x,
                                                 const std::vector<SliceModel>& models,
                                                 int threads) {
    std::vector<SliceProjection> out(models.size());
    parallel_chunks(models.size(), threads, [&](std::size_t b, std::size_t e, int) {
        for (std::size_t s = b; s < e; ++s) out[s] = forward_project(x, models[s]);
    });
    return out;
}

Volume4D adjoint_project_all(const std::vector<std::vector<double>>& residuals,
                             const std::vector<SliceModel>& models, const Grid4D& grid,
                             const std::vector<double>& slice_scale, int threads) {
    if (residuals.size() != models.size() || slice_scale.size() != models.size())
        throw std::invalid_argument("adjoint_project_all: size mismatch");

    const int chunks = threads <= 1 ? 1 : threads;
    std::vector<Volume4D> partial(static_cast<std::size_t>(chunks), Volume4D(grid, 0.0));
    parallel_chunks(models.size(), threads, [&](std::size_t b, std::size_t e, int c) {
        Volume4D& acc = partial[static_cast<std::size_t>(c)];
        for (std::size_t s = b; s < e; ++s) {
            if (slice_scale[s] == 0.0) continue;
            std::vector<double> scaled = residuals[s];
            for (double& r : scaled) r *= slice_scale[s];
            adjoint_project_into(scaled, models[s].weight_sum, models[s], acc);
        }
    });

    // Merge in chunk order for reproducibility.
    Volume4D out = std::move(partial[0]);
    for (std::size_t c = 1; c < partial.size(); ++c)
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] += partial[c].data[i];
    return out;
}

Volume4D assemble_native_series(const std::vector<ScatteredSlice>& slices,
                                const Grid4D& grid) {
    grid.validate();
    Volume4D out(grid, 0.0);
    std::vector<std::uint8_t> have(static_cast<std::size_t>(grid.nz()) * grid.nt, 0);

    for (const ScatteredSlice& sl : slices) {
        const int t = sl.volume_index;
        const int k = sl.slice_index;
        if (t < 0 || t >= grid.nt || k < 0 || k >= grid.nz()) continue;
        have[static_cast<std::size_t>(t) * grid.nz() + k] = 1;
        for (int v = 0; v < std::min(sl.nv, grid.ny()); ++v)
            for (int u = 0; u < std::min(sl.nu, grid.nx()); ++u)
                out.at(u, v, k, t) = sl.at(u, v);
    }

    // Fill missing slices from the nearest acquired slice in z.
    for (int t = 0; t < grid.nt; ++t) {
        for (int k = 0; k < grid.nz(); ++k) {
            if (have[static_cast<std::size_t>(t) * grid.nz() + k]) continue;
            int best = -1, best_d = grid.nz() + 1;
            for (int k2 = 0; k2 < grid.nz(); ++k2) {
                if (!have[static_cast<std::size_t>(t) * grid.nz() + k2]) continue;
                const int d = std::abs(k2 - k);
                if (d < best_d) { best_d = d; best = k2; }
            }
            if (best < 0) continue;
            for (int j = 0; j < grid.ny(); ++j)
                for (int i = 0; i < grid.nx(); ++i)
                    out.at(i, j, k, t) = out.at(i, j, best, t);
        }
    }
    return out;
}

}  // namespace recon4d
