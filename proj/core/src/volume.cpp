#include "recon4d/volume.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <deque>
#include <stdexcept>

namespace recon4d {

Volume3D Volume4D::timepoint(int t) const {
    Volume3D out(grid.space);
    const std::size_t n = grid.space.n_voxels();
    std::memcpy(out.data.data(), data.data() + n * static_cast<std::size_t>(t),
                n * sizeof(double));
    return out;
}

void Volume4D::set_timepoint(int t, const Volume3D& v) {
    const std::size_t n = grid.space.n_voxels();
    if (v.data.size() != n)
        throw std::invalid_argument("set_timepoint: volume size mismatch");
    std::memcpy(data.data() + n * static_cast<std::size_t>(t), v.data.data(),
                n * sizeof(double));
}

Volume3D Volume4D::temporal_mean() const {
    Volume3D out(grid.space, 0.0);
    const std::size_t n = grid.space.n_voxels();
    for (int t = 0; t < grid.nt; ++t) {
        const double* src = data.data() + n * static_cast<std::size_t>(t);
        for (std::size_t i = 0; i < n; ++i) out.data[i] += src[i];
    }
    const double inv = 1.0 / grid.nt;
    for (double& x : out.data) x *= inv;
    return out;
}

bool Volume4D::all_finite() const {
    return std::all_of(data.begin(), data.end(),
                       [](double x) { return std::isfinite(x); });
}

std::size_t Mask3D::count() const {
    return static_cast<std::size_t>(
        std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

Mask3D dilate_mask(const Mask3D& mask, int radius_voxels) {
    if (radius_voxels < 0)
        throw std::invalid_argument("dilate_mask: radius must be >= 0");
    Mask3D cur = mask;
    const Grid3D& g = mask.grid;
    for (int r = 0; r < radius_voxels; ++r) {
        Mask3D next = cur;
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    if (!cur.at(i, j, k)) continue;
                    if (i > 0) next.set(i - 1, j, k, true);
                    if (i + 1 < g.nx) next.set(i + 1, j, k, true);
                    if (j > 0) next.set(i, j - 1, k, true);
                    if (j + 1 < g.ny) next.set(i, j + 1, k, true);
                    if (k > 0) next.set(i, j, k - 1, true);
                    if (k + 1 < g.nz) next.set(i, j, k + 1, true);
                }
        cur = std::move(next);
    }
    return cur;
}

double sample_trilinear(const Volume3D& v, const Vec3& voxel, bool* inside,
                        double outside) {
    const Grid3D& g = v.grid;
    const double x = voxel.x(), y = voxel.y(), z = voxel.z();
    if (x < 0.0 || y < 0.0 || z < 0.0 || x > g.nx - 1 || y > g.ny - 1 || z > g.nz - 1) {
        if (inside) *inside = false;
        return outside;
    }
    if (inside) *inside = true;

    int i0 = static_cast<int>(std::floor(x));
    int j0 = static_cast<int>(std::floor(y));
    int k0 = static_cast<int>(std::floor(z));
    i0 = std::min(i0, g.nx - 2 < 0 ? 0 : g.nx - 2);
    j0 = std::min(j0, g.ny - 2 < 0 ? 0 : g.ny - 2);
    k0 = std::min(k0, g.nz - 2 < 0 ? 0 : g.nz - 2);
    const double fx = g.nx > 1 ? x - i0 : 0.0;
    const double fy = g.ny > 1 ? y - j0 : 0.0;
    const double fz = g.nz > 1 ? z - k0 : 0.0;
    const int i1 = g.nx > 1 ? i0 + 1 : i0;
    const int j1 = g.ny > 1 ? j0 + 1 : j0;
    const int k1 = g.nz > 1 ? k0 + 1 : k0;

    const double c000 = v.at(i0, j0, k0), c100 = v.at(i1, j0, k0);
    const double c010 = v.at(i0, j1, k0), c110 = v.at(i1, j1, k0);
    const double c001 = v.at(i0, j0, k1), c101 = v.at(i1, j0, k1);
    const double c011 = v.at(i0, j1, k1), c111 = v.at(i1, j1, k1);

    const double c00 = c000 + fx * (c100 - c000);
    const double c10 = c010 + fx * (c110 - c010);
    const double c01 = c001 + fx * (c101 - c001);
    const double c11 = c011 + fx * (c111 - c011);
    const double c0 = c00 + fy * (c10 - c00);
    const double c1 = c01 + fy * (c11 - c01);
    return c0 + fz * (c1 - c0);
}

namespace {

Grid3D half_grid(const Grid3D& g) {
    Grid3D h;
    h.nx = (g.nx + 1) / 2;
    h.ny = (g.ny + 1) / 2;
    h.nz = (g.nz + 1) / 2;
    h.dx = g.dx * 2.0;
    h.dy = g.dy * 2.0;
    h.dz = g.dz * 2.0;
    // Block centers shift by half the fine spacing.
    h.origin = g.origin + Vec3(g.dx, g.dy, g.dz) * 0.5;
    return h;
}

}  // namespace

Volume3D downsample2(const Volume3D& v) {
    const Grid3D& g = v.grid;
    Volume3D out(half_grid(g));
    for (int k = 0; k < out.grid.nz; ++k)
        for (int j = 0; j < out.grid.ny; ++j)
            for (int i = 0; i < out.grid.nx; ++i) {
                double sum = 0.0;
                int n = 0;
                for (int dk = 0; dk < 2; ++dk)
                    for (int dj = 0; dj < 2; ++dj)
                        for (int di = 0; di < 2; ++di) {
                            const int ii = 2 * i + di, jj = 2 * j + dj, kk = 2 * k + dk;
                            if (!g.contains(ii, jj, kk)) continue;
                            sum += v.at(ii, jj, kk);
                            ++n;
                        }
                out.at(i, j, k) = n > 0 ? sum / n : 0.0;
            }
    return out;
}

Mask3D downsample2(const Mask3D& m) {
    const Grid3D& g = m.grid;
    Mask3D out(half_grid(g));
    for (int k = 0; k < out.grid.nz; ++k)
        for (int j = 0; j < out.grid.ny; ++j)
            for (int i = 0; i < out.grid.nx; ++i) {
                bool any = false;
                for (int dk = 0; dk < 2 && !any; ++dk)
                    for (int dj = 0; dj < 2 && !any; ++dj)
                        for (int di = 0; di < 2 && !any; ++di) {
                            const int ii = 2 * i + di, jj = 2 * j + dj, kk = 2 * k + dk;
                            if (g.contains(ii, jj, kk) && m.at(ii, jj, kk)) any = true;
                        }
                out.set(i, j, k, any);
            }
    return out;
}

Volume4D refine_space2(const Volume4D& v) {
    Grid4D fine = v.grid;
    fine.space.nx = 2 * v.grid.nx() - 1;
    fine.space.ny = 2 * v.grid.ny() - 1;
    fine.space.nz = 2 * v.grid.nz() - 1;
    fine.space.dx = v.grid.space.dx * 0.5;
    fine.space.dy = v.grid.space.dy * 0.5;
    fine.space.dz = v.grid.space.dz * 0.5;

    Volume4D out(fine);
    for (int t = 0; t < v.grid.nt; ++t) {
        const Volume3D coarse = v.timepoint(t);
        for (int k = 0; k < fine.nz(); ++k)
            for (int j = 0; j < fine.ny(); ++j)
                for (int i = 0; i < fine.nx(); ++i)
                    out.at(i, j, k, t) =
                        sample_trilinear(coarse, Vec3(i * 0.5, j * 0.5, k * 0.5));
    }
    return out;
}

void fill_from_nearest(Volume3D& v, const std::vector<std::uint8_t>& covered,
                       const Mask3D* mask) {
    const Grid3D& g = v.grid;
    if (covered.size() != g.n_voxels())
        throw std::invalid_argument("fill_from_nearest: coverage size mismatch");

    // Multi-source BFS filling holes in `vol`; `restrict_mask` limits both
    // sources and propagation paths.
    auto bfs = [&](Volume3D& vol, const Mask3D* restrict_mask) {
        std::vector<std::uint8_t> done(covered);
        std::deque<std::array<int, 3>> queue;
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    const std::size_t idx = g.index(i, j, k);
                    if (restrict_mask && !restrict_mask->data[idx]) {
                        done[idx] = 1;  // out of play
                        continue;
                    }
                    if (covered[idx]) queue.push_back({i, j, k});
                }
        const int off[6][3] = {{-1, 0, 0}, {1, 0, 0},  {0, -1, 0},
                               {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
        while (!queue.empty()) {
            const auto [i, j, k] = queue.front();
            queue.pop_front();
            const double val = vol.at(i, j, k);
            for (const auto& o : off) {
                const int ii = i + o[0], jj = j + o[1], kk = k + o[2];
                if (!g.contains(ii, jj, kk)) continue;
                const std::size_t idx = g.index(ii, jj, kk);
                if (done[idx]) continue;
                done[idx] = 1;
                vol.data[idx] = val;
                queue.push_back({ii, jj, kk});
            }
        }
    };

    if (mask) {
        Volume3D outside = v;  // original values, filled without restriction
        bfs(v, mask);
        bfs(outside, nullptr);
        for (std::size_t i = 0; i < v.data.size(); ++i)
            if (!mask->data[i]) v.data[i] = outside.data[i];
    } else {
        bfs(v, nullptr);
    }
}

}  // namespace recon4d
