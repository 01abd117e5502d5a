#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "disgan/errors.hpp"

namespace disgan {

/// A 3D scalar grid in (depth, height, width) axis order, width fastest.
/// Voxel data is float32; spacing is the per-axis voxel size in mm.
/// Volumes are treated as immutable values: every operation returns a new one.
struct Volume {
  std::array<int, 3> shape{0, 0, 0};  // (d, h, w)
  std::vector<float> voxels;
  std::array<float, 3> spacing{1.0f, 1.0f, 1.0f};
  std::array<float, 3> origin{0.0f, 0.0f, 0.0f};

  Volume() = default;
  Volume(int d, int h, int w)
      : shape{d, h, w}, voxels(std::size_t(d) * h * w, 0.0f) {
    if (d < 1 || h < 1 || w < 1)
      throw InvalidSize("volume: all extents must be >= 1");
  }

  std::int64_t numel() const { return std::int64_t(shape[0]) * shape[1] * shape[2]; }
  int d() const { return shape[0]; }
  int h() const { return shape[1]; }
  int w() const { return shape[2]; }

  float& at(int z, int y, int x) {
    return voxels[(std::size_t(z) * shape[1] + y) * shape[2] + x];
  }
  const float& at(int z, int y, int x) const {
    return voxels[(std::size_t(z) * shape[1] + y) * shape[2] + x];
  }
};

struct VolumeStats {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Two-pass moments in double precision, fixed accumulation order.
VolumeStats volume_stats(const Volume& v);

/// Affine-map to zero mean, unit standard deviation (population convention).
/// Throws DegenerateVolume when std <= 1e-8.
Volume standardize(const Volume& v);

/// Throws if any voxel is NaN/Inf; used on every external data entry point.
void require_finite(const Volume& v, const std::string& what);

/// Deterministic synthetic test object: smooth background plus ellipsoidal
/// shells and thin tubes, values in [0,1]. Extents must be even and >= 32.
Volume phantom(std::uint64_t seed, const std::array<int, 3>& size);

inline Volume phantom_cube(std::uint64_t seed, int n) {
  return phantom(seed, {n, n, n});
}

}  // namespace disgan
