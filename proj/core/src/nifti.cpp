#include "recon4d/nifti.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace recon4d {

namespace {

// NIfTI-1 header, 348 bytes, little-endian on disk.
#pragma pack(push, 1)
struct Nifti1Header {
    std::int32_t sizeof_hdr;    // must be 348
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code;
    std::int16_t sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4];
    float srow_y[4];
    float srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtInt16 = 4;
constexpr char kXyztUnitsMmSec = 10;  // NIFTI_UNITS_MM | NIFTI_UNITS_SEC

[[noreturn]] void fail(const std::string& path, const std::string& what,
                       long offset = -1) {
    std::string msg = path + ": " + what;
    if (offset >= 0) msg += " (at byte offset " + std::to_string(offset) + ")";
    throw io_error(msg);
}

}  // namespace

Volume4D read_nifti(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open file");

    Nifti1Header h{};
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (in.gcount() != sizeof(h))
        fail(path, "truncated header: expected 348 bytes, got " +
                       std::to_string(in.gcount()), 0);

    if (h.sizeof_hdr != 348) {
        // 348 byteswapped is 0x5C010000.
        if (h.sizeof_hdr == 0x5C010000)
            fail(path, "big-endian NIfTI-1 is not supported (little-endian only)", 0);
        fail(path, "bad header: sizeof_hdr = " + std::to_string(h.sizeof_hdr) +
                       ", expected 348", 0);
    }
    if (std::memcmp(h.magic, "n+1\0", 4) != 0) {
        if (std::memcmp(h.magic, "ni1\0", 4) == 0)
            fail(path, "two-file NIfTI (.hdr/.img) is not supported", 344);
        fail(path, "bad magic: expected \"n+1\"", 344);
    }
    if (h.dim[0] < 1 || h.dim[0] > 4)
        fail(path, "unsupported dimensionality dim[0] = " + std::to_string(h.dim[0]) +
                       " (1..4 supported)", 40);
    if (h.datatype != kDtFloat32 && h.datatype != kDtInt16)
        fail(path, "unsupported datatype " + std::to_string(h.datatype) +
                       " (float32 and int16 supported)", 70);
    const int expected_bitpix = h.datatype == kDtFloat32 ? 32 : 16;
    if (h.bitpix != expected_bitpix)
        fail(path, "bitpix " + std::to_string(h.bitpix) + " inconsistent with datatype", 72);

    Grid4D grid;
    grid.space.nx = h.dim[0] >= 1 ? h.dim[1] : 1;
    grid.space.ny = h.dim[0] >= 2 ? h.dim[2] : 1;
    grid.space.nz = h.dim[0] >= 3 ? h.dim[3] : 1;
    grid.nt = h.dim[0] >= 4 ? h.dim[4] : 1;
    if (grid.space.nx < 1 || grid.space.ny < 1 || grid.space.nz < 1 || grid.nt < 1)
        fail(path, "non-positive dimension in header", 40);
    grid.space.dx = h.pixdim[1] > 0.0f ? h.pixdim[1] : 1.0;
    grid.space.dy = h.pixdim[2] > 0.0f ? h.pixdim[2] : 1.0;
    grid.space.dz = h.pixdim[3] > 0.0f ? h.pixdim[3] : 1.0;
    grid.tr = h.pixdim[4] > 0.0f ? h.pixdim[4] : 1.0;
    if (h.sform_code > 0)
        grid.space.origin = Vec3(h.srow_x[3], h.srow_y[3], h.srow_z[3]);
    else if (h.qform_code > 0)
        grid.space.origin = Vec3(h.qoffset_x, h.qoffset_y, h.qoffset_z);

    const long vox_offset = static_cast<long>(h.vox_offset);
    if (vox_offset < 348) fail(path, "vox_offset smaller than the header", 108);
    in.seekg(vox_offset, std::ios::beg);
    if (!in) fail(path, "cannot seek to voxel data", vox_offset);

    Volume4D vol(grid, 0.0);
    const std::size_t n = grid.n_voxels();
    if (h.datatype == kDtFloat32) {
        std::vector<float> raw(n);
        in.read(reinterpret_cast<char*>(raw.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
        if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float))
            fail(path, "truncated voxel payload: expected " +
                           std::to_string(n * sizeof(float)) + " bytes, got " +
                           std::to_string(in.gcount()), vox_offset);
        // scl_slope == 0 means unscaled per the NIfTI-1 rules.
        if (h.scl_slope != 0.0f && (h.scl_slope != 1.0f || h.scl_inter != 0.0f)) {
            for (std::size_t i = 0; i < n; ++i)
                vol.data[i] = static_cast<double>(h.scl_slope) * raw[i] +
                              static_cast<double>(h.scl_inter);
        } else {
            for (std::size_t i = 0; i < n; ++i) vol.data[i] = raw[i];
        }
    } else {
        std::vector<std::int16_t> raw(n);
        in.read(reinterpret_cast<char*>(raw.data()),
                static_cast<std::streamsize>(n * sizeof(std::int16_t)));
        if (static_cast<std::size_t>(in.gcount()) != n * sizeof(std::int16_t))
            fail(path, "truncated voxel payload: expected " +
                           std::to_string(n * sizeof(std::int16_t)) + " bytes, got " +
                           std::to_string(in.gcount()), vox_offset);
        const double slope = h.scl_slope != 0.0f ? h.scl_slope : 1.0;
        const double inter = h.scl_slope != 0.0f ? h.scl_inter : 0.0;
        for (std::size_t i = 0; i < n; ++i) vol.data[i] = slope * raw[i] + inter;
    }
    return vol;
}

void write_nifti(const Volume4D& volume, const std::string& path) {
    volume.grid.validate();

    Nifti1Header h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 4;
    h.dim[1] = static_cast<std::int16_t>(volume.grid.nx());
    h.dim[2] = static_cast<std::int16_t>(volume.grid.ny());
    h.dim[3] = static_cast<std::int16_t>(volume.grid.nz());
    h.dim[4] = static_cast<std::int16_t>(volume.grid.nt);
    h.dim[5] = h.dim[6] = h.dim[7] = 1;
    h.datatype = kDtFloat32;
    h.bitpix = 32;
    h.pixdim[0] = 1.0f;
    h.pixdim[1] = static_cast<float>(volume.grid.space.dx);
    h.pixdim[2] = static_cast<float>(volume.grid.space.dy);
    h.pixdim[3] = static_cast<float>(volume.grid.space.dz);
    h.pixdim[4] = static_cast<float>(volume.grid.tr);
    h.vox_offset = 352.0f;
    h.scl_slope = 0.0f;
    h.scl_inter = 0.0f;
    h.xyzt_units = kXyztUnitsMmSec;
    std::strncpy(h.descrip, "recon4d", sizeof(h.descrip) - 1);
    h.sform_code = 1;
    h.srow_x[0] = static_cast<float>(volume.grid.space.dx);
    h.srow_y[1] = static_cast<float>(volume.grid.space.dy);
    h.srow_z[2] = static_cast<float>(volume.grid.space.dz);
    h.srow_x[3] = static_cast<float>(volume.grid.space.origin.x());
    h.srow_y[3] = static_cast<float>(volume.grid.space.origin.y());
    h.srow_z[3] = static_cast<float>(volume.grid.space.origin.z());
    std::memcpy(h.magic, "n+1\0", 4);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(path, "cannot open file for writing");
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    const char ext[4] = {0, 0, 0, 0};
    out.write(ext, 4);

    std::vector<float> raw(volume.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<float>(volume.data[i]);
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!out) fail(path, "write failed");
}

Mask3D read_mask_nifti(const std::string& path) {
    const Volume4D v = read_nifti(path);
    if (v.grid.nt != 1) fail(path, "mask must be a 3D volume (nt == 1)");
    Mask3D m(v.grid.space, 0);
    for (std::size_t i = 0; i < v.data.size(); ++i) m.data[i] = v.data[i] != 0.0;
    return m;
}

void write_mask_nifti(const Mask3D& mask, const std::string& path) {
    Grid4D g;
    g.space = mask.grid;
    g.nt = 1;
    g.tr = 1.0;
    Volume4D v(g, 0.0);
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        v.data[i] = mask.data[i] ? 1.0 : 0.0;
    write_nifti(v, path);
}

}  // namespace recon4d
