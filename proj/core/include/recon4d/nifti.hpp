#pragma once

#include <stdexcept>
#include <string>

#include "recon4d/volume.hpp"

namespace recon4d {

/// File I/O failure; the message names the file and, where meaningful, the
/// byte offset of the problem.
class io_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Read a single-file little-endian NIfTI-1 volume (.nii). Supported data
/// types: float32 and int16 (with scl_slope/scl_inter applied). Up to four
/// dimensions. Spacing comes from pixdim[1..3], TR from pixdim[4], origin
/// from the sform translation column when present.
Volume4D read_nifti(const std::string& path);

/// Write a volume as single-file NIfTI-1, float32, little-endian, with a
/// diagonal sform carrying spacing and origin. read_nifti(write_nifti(v))
/// is bitwise-identical for float32-valued data.
void write_nifti(const Volume4D& volume, const std::string& path);

/// Read a volume and binarize it (non-zero -> 1). Requires nt == 1.
Mask3D read_mask_nifti(const std::string& path);

/// Write a mask as a 3D float32 NIfTI of 0/1 values.
void write_mask_nifti(const Mask3D& mask, const std::string& path);

}  // namespace recon4d
