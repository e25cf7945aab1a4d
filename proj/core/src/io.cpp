#include "recon4d/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace recon4d {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw io_error(path + ": line " + std::to_string(line_no) +
                       ": cannot parse number '" + s + "'");
    }
}

int parse_int(const std::string& s, const std::string& path, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw io_error(path + ": line " + std::to_string(line_no) +
                       ": cannot parse integer '" + s + "'");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Pose and sidecar CSV
// ---------------------------------------------------------------------------

void write_pose_csv(const std::string& path, const std::vector<PoseRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error(path + ": cannot open file for writing");
    out << kPoseCsvHeader << '\n';
    for (const PoseRow& r : rows)
        out << r.slice_index << ',' << r.volume_index << ',' << fmt(r.rx_deg) << ','
            << fmt(r.ry_deg) << ',' << fmt(r.rz_deg) << ',' << fmt(r.tx_mm) << ','
            << fmt(r.ty_mm) << ',' << fmt(r.tz_mm) << '\n';
    if (!out) throw io_error(path + ": write failed");
}

std::vector<PoseRow> read_pose_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error(path + ": cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw io_error(path + ": empty file");
    if (trim(line) != kPoseCsvHeader)
        throw io_error(path + ": bad header, expected '" + std::string(kPoseCsvHeader) +
                       "'");
    std::vector<PoseRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8)
            throw io_error(path + ": line " + std::to_string(line_no) +
                           ": expected 8 fields, got " + std::to_string(f.size()));
        PoseRow r;
        r.slice_index = parse_int(f[0], path, line_no);
        r.volume_index = parse_int(f[1], path, line_no);
        r.rx_deg = parse_double(f[2], path, line_no);
        r.ry_deg = parse_double(f[3], path, line_no);
        r.rz_deg = parse_double(f[4], path, line_no);
        r.tx_mm = parse_double(f[5], path, line_no);
        r.ty_mm = parse_double(f[6], path, line_no);
        r.tz_mm = parse_double(f[7], path, line_no);
        rows.push_back(r);
    }
    return rows;
}

void write_sidecar_csv(const std::string& path, const std::vector<SidecarRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error(path + ": cannot open file for writing");
    out << kSidecarCsvHeader << '\n';
    for (const SidecarRow& r : rows)
        out << r.pose.slice_index << ',' << r.pose.volume_index << ','
            << fmt(r.pose.rx_deg) << ',' << fmt(r.pose.ry_deg) << ','
            << fmt(r.pose.rz_deg) << ',' << fmt(r.pose.tx_mm) << ','
            << fmt(r.pose.ty_mm) << ',' << fmt(r.pose.tz_mm) << ','
            << fmt(r.acq_time_s) << ',' << fmt(r.sigma) << '\n';
    if (!out) throw io_error(path + ": write failed");
}

std::vector<SidecarRow> read_sidecar_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error(path + ": cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw io_error(path + ": empty file");
    if (trim(line) != kSidecarCsvHeader)
        throw io_error(path + ": bad header, expected '" +
                       std::string(kSidecarCsvHeader) + "'");
    std::vector<SidecarRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 10)
            throw io_error(path + ": line " + std::to_string(line_no) +
                           ": expected 10 fields, got " + std::to_string(f.size()));
        SidecarRow r;
        r.pose.slice_index = parse_int(f[0], path, line_no);
        r.pose.volume_index = parse_int(f[1], path, line_no);
        r.pose.rx_deg = parse_double(f[2], path, line_no);
        r.pose.ry_deg = parse_double(f[3], path, line_no);
        r.pose.rz_deg = parse_double(f[4], path, line_no);
        r.pose.tx_mm = parse_double(f[5], path, line_no);
        r.pose.ty_mm = parse_double(f[6], path, line_no);
        r.pose.tz_mm = parse_double(f[7], path, line_no);
        r.acq_time_s = parse_double(f[8], path, line_no);
        r.sigma = parse_double(f[9], path, line_no);
        rows.push_back(r);
    }
    return rows;
}

PoseRow pose_row_from_transform(const RigidTransform& t, int slice_index,
                                int volume_index) {
    PoseRow r;
    r.slice_index = slice_index;
    r.volume_index = volume_index;
    const Vec3 deg = t.angles_deg();
    r.rx_deg = deg.x();
    r.ry_deg = deg.y();
    r.rz_deg = deg.z();
    r.tx_mm = t.translation.x();
    r.ty_mm = t.translation.y();
    r.tz_mm = t.translation.z();
    return r;
}

RigidTransform transform_from_pose_row(const PoseRow& row, const Vec3& center) {
    return RigidTransform::from_degrees(row.rx_deg, row.ry_deg, row.rz_deg, row.tx_mm,
                                        row.ty_mm, row.tz_mm, center);
}

// ---------------------------------------------------------------------------
// Slice stacks
// ---------------------------------------------------------------------------

Volume4D slices_to_stack(const std::vector<ScatteredSlice>& slices) {
    if (slices.empty()) throw std::invalid_argument("slices_to_stack: no slices");
    const ScatteredSlice& first = slices.front();
    for (const ScatteredSlice& s : slices)
        if (s.nu != first.nu || s.nv != first.nv)
            throw std::invalid_argument("slices_to_stack: inhomogeneous slice shapes");

    Grid4D g;
    g.space.nx = first.nu;
    g.space.ny = first.nv;
    g.space.nz = 1;
    g.space.dx = first.du;
    g.space.dy = first.dv;
    g.space.dz = first.thickness;
    g.nt = static_cast<int>(slices.size());
    g.tr = 1.0;  // stack container; real timing lives in the sidecar

    Volume4D stack(g, 0.0);
    const std::size_t n = first.n_pixels();
    for (std::size_t s = 0; s < slices.size(); ++s)
        std::copy(slices[s].data.begin(), slices[s].data.end(),
                  stack.data.begin() + static_cast<std::ptrdiff_t>(n * s));
    return stack;
}

std::vector<SidecarRow> slices_to_sidecar(const std::vector<ScatteredSlice>& slices) {
    std::vector<SidecarRow> rows;
    rows.reserve(slices.size());
    for (const ScatteredSlice& s : slices) {
        SidecarRow r;
        r.pose = pose_row_from_transform(s.pose, s.slice_index, s.volume_index);
        r.acq_time_s = s.acq_time;
        r.sigma = s.sigma;
        rows.push_back(r);
    }
    return rows;
}

std::vector<ScatteredSlice> stack_to_slices(const Volume4D& stack,
                                            const std::vector<SidecarRow>& rows,
                                            const Vec3& rotation_center) {
    if (static_cast<std::size_t>(stack.grid.nt) != rows.size())
        throw std::invalid_argument(
            "stack_to_slices: sidecar row count does not match stack");
    std::vector<ScatteredSlice> slices(rows.size());
    const std::size_t n = stack.grid.space.n_voxels();
    for (std::size_t s = 0; s < rows.size(); ++s) {
        ScatteredSlice& sl = slices[s];
        sl.nu = stack.grid.nx();
        sl.nv = stack.grid.ny();
        sl.du = stack.grid.space.dx;
        sl.dv = stack.grid.space.dy;
        sl.thickness = stack.grid.space.dz;
        sl.slice_index = rows[s].pose.slice_index;
        sl.volume_index = rows[s].pose.volume_index;
        sl.acq_time = rows[s].acq_time_s;
        sl.sigma = rows[s].sigma;
        sl.pose = transform_from_pose_row(rows[s].pose, rotation_center);
        sl.data.assign(stack.data.begin() + static_cast<std::ptrdiff_t>(n * s),
                       stack.data.begin() + static_cast<std::ptrdiff_t>(n * (s + 1)));
    }
    return slices;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error(path + ": cannot open file");
    Config c;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw io_error(path + ": line " + std::to_string(line_no) +
                           ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw io_error(path + ": line " + std::to_string(line_no) + ": empty key");
        c.values_[key] = value;
    }
    return c;
}

std::string Config::serialize() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
    return os.str();
}

void Config::write(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error(path + ": cannot open file for writing");
    out << serialize();
    if (!out) throw io_error(path + ": write failed");
}

void Config::set(const std::string& key, double value) { values_[key] = fmt(value); }
void Config::set(const std::string& key, int value) {
    values_[key] = std::to_string(value);
}
void Config::set_u64(const std::string& key, std::uint64_t value) {
    values_[key] = std::to_string(value);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw io_error("config key '" + key + "': cannot parse number '" + it->second +
                       "'");
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw io_error("config key '" + key + "': cannot parse integer '" + it->second +
                       "'");
    }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw io_error("config key '" + key + "': cannot parse integer '" + it->second +
                       "'");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw io_error("config key '" + key + "': cannot parse boolean '" + v + "'");
}

// ---------------------------------------------------------------------------
// Checksums
// ---------------------------------------------------------------------------

std::string fnv1a_file_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(path + ": cannot open file");
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001b3ULL;
        }
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
    return out;
}

}  // namespace recon4d
