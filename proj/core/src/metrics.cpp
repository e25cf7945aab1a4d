#include "recon4d/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace recon4d {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double sharpness(const Volume3D& volume, const Mask3D& mask) {
    const Grid3D& g = volume.grid;
    if (mask.grid.n_voxels() != g.n_voxels())
        throw std::invalid_argument("sharpness: mask grid mismatch");
    if (mask.count() == 0) throw std::invalid_argument("sharpness: empty mask");

    // Laplacian responses over in-mask voxels with a full 6-neighbourhood.
    std::vector<double> lap;
    lap.reserve(mask.count());
    for (int k = 1; k + 1 < g.nz; ++k)
        for (int j = 1; j + 1 < g.ny; ++j)
            for (int i = 1; i + 1 < g.nx; ++i) {
                if (!mask.at(i, j, k)) continue;
                const double c = volume.at(i, j, k);
                const double l = volume.at(i - 1, j, k) + volume.at(i + 1, j, k) +
                                 volume.at(i, j - 1, k) + volume.at(i, j + 1, k) +
                                 volume.at(i, j, k - 1) + volume.at(i, j, k + 1) -
                                 6.0 * c;
                lap.push_back(l);
            }
    if (lap.empty())
        throw std::invalid_argument("sharpness: mask has no interior voxels");

    double mean = 0.0;
    for (double l : lap) mean += l;
    mean /= static_cast<double>(lap.size());
    double ssd = 0.0;
    for (double l : lap) {
        const double d = l - mean;
        ssd += d * d;
    }
    return ssd;  // variance scaled by sample count
}

std::pair<Volume3D, double> temporal_std(const Volume4D& series, const Mask3D& mask) {
    const Grid4D& g = series.grid;
    if (g.nt < 2) throw std::invalid_argument("temporal_std: needs nt >= 2");
    if (mask.grid.n_voxels() != g.space.n_voxels())
        throw std::invalid_argument("temporal_std: mask grid mismatch");

    const std::size_t n3 = g.space.n_voxels();
    Volume3D out(g.space, 0.0);
    for (std::size_t i = 0; i < n3; ++i) {
        double mean = 0.0;
        for (int t = 0; t < g.nt; ++t)
            mean += series.data[n3 * static_cast<std::size_t>(t) + i];
        mean /= g.nt;
        double ss = 0.0;
        for (int t = 0; t < g.nt; ++t) {
            const double d = series.data[n3 * static_cast<std::size_t>(t) + i] - mean;
            ss += d * d;
        }
        out.data[i] = std::sqrt(ss / g.nt);  // population normalization
    }

    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < n3; ++i) {
        if (!mask.data[i]) continue;
        sum += out.data[i];
        ++n;
    }
    if (n == 0) throw std::invalid_argument("temporal_std: empty mask");
    return {std::move(out), sum / static_cast<double>(n)};
}

double rmse_in_mask(const Volume4D& a, const Volume4D& b, const Mask3D& mask) {
    if (a.grid.n_voxels() != b.grid.n_voxels())
        throw std::invalid_argument("rmse_in_mask: grid mismatch");
    const std::size_t n3 = a.grid.space.n_voxels();
    double ss = 0.0;
    std::size_t n = 0;
    for (int t = 0; t < a.grid.nt; ++t)
        for (std::size_t i = 0; i < n3; ++i) {
            if (!mask.data[i]) continue;
            const double d = a.data[n3 * static_cast<std::size_t>(t) + i] -
                             b.data[n3 * static_cast<std::size_t>(t) + i];
            ss += d * d;
            ++n;
        }
    if (n == 0) throw std::invalid_argument("rmse_in_mask: empty mask");
    return std::sqrt(ss / static_cast<double>(n));
}

std::string EvaluationReport::csv_header() {
    return "subject,sharpness_raw,sharpness_linear,sharpness_ours,"
           "std_raw,std_linear,std_ours,"
           "rel_sharpness_linear,rel_sharpness_ours,rel_std_linear,rel_std_ours,"
           "rmse_raw,rmse_linear,rmse_ours";
}

std::string EvaluationReport::csv_row(const std::string& subject) const {
    std::ostringstream os;
    os << subject << ',' << fmt(sharpness_raw) << ',' << fmt(sharpness_linear) << ','
       << fmt(sharpness_ours) << ',' << fmt(std_raw) << ',' << fmt(std_linear) << ','
       << fmt(std_ours) << ',' << fmt(rel_sharpness_linear) << ','
       << fmt(rel_sharpness_ours) << ',' << fmt(rel_std_linear) << ','
       << fmt(rel_std_ours) << ',';
    os << (rmse_raw ? fmt(*rmse_raw) : "") << ',';
    os << (rmse_linear ? fmt(*rmse_linear) : "") << ',';
    os << (rmse_ours ? fmt(*rmse_ours) : "");
    return os.str();
}

std::string EvaluationReport::key_value_text() const {
    std::ostringstream os;
    os << "sharpness.raw = " << fmt(sharpness_raw) << '\n'
       << "sharpness.linear = " << fmt(sharpness_linear) << '\n'
       << "sharpness.ours = " << fmt(sharpness_ours) << '\n'
       << "std.raw = " << fmt(std_raw) << '\n'
       << "std.linear = " << fmt(std_linear) << '\n'
       << "std.ours = " << fmt(std_ours) << '\n'
       << "rel.sharpness.linear = " << fmt(rel_sharpness_linear) << '\n'
       << "rel.sharpness.ours = " << fmt(rel_sharpness_ours) << '\n'
       << "rel.std.linear = " << fmt(rel_std_linear) << '\n'
       << "rel.std.ours = " << fmt(rel_std_ours) << '\n';
    if (rmse_raw) os << "rmse.raw = " << fmt(*rmse_raw) << '\n';
    if (rmse_linear) os << "rmse.linear = " << fmt(*rmse_linear) << '\n';
    if (rmse_ours) os << "rmse.ours = " << fmt(*rmse_ours) << '\n';
    return os.str();
}

EvaluationReport evaluate(const Volume4D& raw, const Volume4D& linear,
                          const Volume4D& ours, const Mask3D& mask,
                          const Volume4D* truth) {
    const std::size_t n = raw.grid.n_voxels();
    if (linear.grid.n_voxels() != n || ours.grid.n_voxels() != n ||
        raw.grid.nt != linear.grid.nt || raw.grid.nt != ours.grid.nt)
        throw std::invalid_argument("evaluate: series grids must match");
    if (truth && truth->grid.n_voxels() != n)
        throw std::invalid_argument("evaluate: truth grid must match");

    EvaluationReport r;
    r.sharpness_raw = sharpness(raw.temporal_mean(), mask);
    r.sharpness_linear = sharpness(linear.temporal_mean(), mask);
    r.sharpness_ours = sharpness(ours.temporal_mean(), mask);
    r.std_raw = temporal_std(raw, mask).second;
    r.std_linear = temporal_std(linear, mask).second;
    r.std_ours = temporal_std(ours, mask).second;
    r.rel_sharpness_linear = r.sharpness_linear / r.sharpness_raw;
    r.rel_sharpness_ours = r.sharpness_ours / r.sharpness_raw;
    r.rel_std_linear = r.std_linear / r.std_raw;
    r.rel_std_ours = r.std_ours / r.std_raw;
    if (truth) {
        r.rmse_raw = rmse_in_mask(raw, *truth, mask);
        r.rmse_linear = rmse_in_mask(linear, *truth, mask);
        r.rmse_ours = rmse_in_mask(ours, *truth, mask);
    }
    return r;
}

}  // namespace recon4d
