#include "recon4d/psf.hpp"

#include <stdexcept>

namespace recon4d {

void PsfParams::validate() const {
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0) || !(sigma_z > 0.0) || !(sigma_t > 0.0))
        throw std::invalid_argument("PsfParams: all sigmas must be > 0");
    if (!(time_scale > 0.0))
        throw std::invalid_argument("PsfParams: time_scale must be > 0");
    if (!(truncation_radius >= 1.0))
        throw std::invalid_argument("PsfParams: truncation_radius must be >= 1");
}

double time_scale_factor(double slice_thickness_mm, double tr_s) {
    if (!(slice_thickness_mm > 0.0))
        throw std::invalid_argument("time_scale_factor: slice thickness must be > 0");
    if (!(tr_s > 0.0))
        throw std::invalid_argument("time_scale_factor: TR must be > 0");
    return slice_thickness_mm / tr_s;
}

PsfParams default_psf(const Grid4D& grid) {
    constexpr double kFwhmToSigma = 2.355;  // FWHM = 2 sqrt(2 ln 2) sigma
    PsfParams p;
    p.sigma_x = grid.space.dx / kFwhmToSigma;
    p.sigma_y = grid.space.dy / kFwhmToSigma;
    p.sigma_z = grid.space.dz / kFwhmToSigma;
    p.time_scale = time_scale_factor(grid.space.dz, grid.tr);
    p.sigma_t = p.time_scale * grid.tr;  // one scaled TR
    p.truncation_radius = 3.0;
    return p;
}

double psf_weight(const PsfParams& p, double dx, double dy, double dz, double dt_s) {
    const double dt = dt_s * p.time_scale;
    const double r = p.truncation_radius;
    if (std::abs(dx) > r * p.sigma_x || std::abs(dy) > r * p.sigma_y ||
        std::abs(dz) > r * p.sigma_z || std::abs(dt) > r * p.sigma_t)
        return 0.0;
    const double q = dx * dx / (2.0 * p.sigma_x * p.sigma_x) +
                     dy * dy / (2.0 * p.sigma_y * p.sigma_y) +
                     dz * dz / (2.0 * p.sigma_z * p.sigma_z) +
                     dt * dt / (2.0 * p.sigma_t * p.sigma_t);
    return std::exp(-q);
}

std::vector<FootprintEntry> kernel_footprint(const PsfParams& p, const Grid4D& grid,
                                             const Vec3& center_world, double time_s) {
    std::vector<FootprintEntry> out;
    for_each_footprint_entry(p, grid, center_world, time_s,
                             [&](int i, int j, int k, int t, double w) {
                                 if (w > 0.0) out.push_back({i, j, k, t, w});
                             });
    return out;
}

}  // namespace recon4d
