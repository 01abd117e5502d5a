#pragma once

#include <string>

#include "disgan/volume.hpp"

namespace disgan {

/// Reads `.nii` (NIfTI-1 single file, float32 or int16, either endianness)
/// or `.rawv` (little-endian float32 payload + `<path>.json` sidecar with
/// {"shape":[d,h,w],"spacing":[...](,"origin":[...])}).
Volume read_volume(const std::string& path);

/// Writes `.nii` (little-endian, datatype float32, vox_offset 352) or `.rawv`.
/// The voxel payload round-trips bit-exactly through read_volume.
void write_volume(const Volume& v, const std::string& path);

}  // namespace disgan
