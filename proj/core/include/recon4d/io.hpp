#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "recon4d/forward_model.hpp"
#include "recon4d/nifti.hpp"

namespace recon4d {

/// One row of the motion-parameter table. Angles are degrees at this
/// boundary; the rotation center is supplied separately when building
/// transforms.
struct PoseRow {
    int slice_index = 0;
    int volume_index = 0;
    double rx_deg = 0.0, ry_deg = 0.0, rz_deg = 0.0;
    double tx_mm = 0.0, ty_mm = 0.0, tz_mm = 0.0;
};

inline constexpr const char* kPoseCsvHeader =
    "slice_index,volume_index,rx_deg,ry_deg,rz_deg,tx_mm,ty_mm,tz_mm";

/// Pose CSV, one row per acquired slice, ordered by acquisition time.
void write_pose_csv(const std::string& path, const std::vector<PoseRow>& rows);
std::vector<PoseRow> read_pose_csv(const std::string& path);

/// Slice sidecar: the pose columns plus acquisition time and noise sigma.
struct SidecarRow {
    PoseRow pose;
    double acq_time_s = 0.0;
    double sigma = 1.0;
};

inline constexpr const char* kSidecarCsvHeader =
    "slice_index,volume_index,rx_deg,ry_deg,rz_deg,tx_mm,ty_mm,tz_mm,acq_time_s,sigma";

void write_sidecar_csv(const std::string& path, const std::vector<SidecarRow>& rows);
std::vector<SidecarRow> read_sidecar_csv(const std::string& path);

PoseRow pose_row_from_transform(const RigidTransform& t, int slice_index,
                                int volume_index);
RigidTransform transform_from_pose_row(const PoseRow& row, const Vec3& center);

/// Slices <-> NIfTI stack (one slice per 4th-dim index) with sidecar rows.
Volume4D slices_to_stack(const std::vector<ScatteredSlice>& slices);
std::vector<SidecarRow> slices_to_sidecar(const std::vector<ScatteredSlice>& slices);
std::vector<ScatteredSlice> stack_to_slices(const Volume4D& stack,
                                            const std::vector<SidecarRow>& rows,
                                            const Vec3& rotation_center);

/// Flat key-value configuration: `key = value` lines, '#' comments, UTF-8,
/// LF line endings, '.' decimal separator. Serialization is sorted by key,
/// so written files are reproducible.
class Config {
  public:
    Config() = default;

    static Config from_file(const std::string& path);
    void write(const std::string& path) const;
    std::string serialize() const;

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    void set(const std::string& key, double value);
    void set(const std::string& key, int value);
    void set_u64(const std::string& key, std::uint64_t value);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

/// FNV-1a 64-bit checksum of a file's bytes, as fixed-width hex.
std::string fnv1a_file_hex(const std::string& path);

}  // namespace recon4d
