#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "disgan/tensor.hpp"
#include "disgan/volume.hpp"

namespace disgan {

/// Aligned training sample: HR patch, its x2-downsampled LR twin, the source
/// voxel coordinates, and the degradation noise level (0 when clean).
struct PatchPair {
  Volume hr;
  Volume lr;
  std::array<int, 3> origin{0, 0, 0};
  float noise_sigma = 0.0f;
};

/// Overlapping patch grid: per axis the origins are 0, stride, 2*stride, ...
/// while origin + size <= extent; when the last regular origin does not reach
/// the boundary, a flush origin at extent - size is appended.
std::vector<int> patch_origins_1d(int extent, int size, int stride);

std::vector<std::pair<Volume, std::array<int, 3>>> extract_patches(const Volume& v,
                                                                   int size = 64,
                                                                   int stride = 16);

/// Trilinear interpolation at the centers of each factor^3 cell. For factor 2
/// this is exactly 2x2x2 block averaging; constants are preserved for every
/// factor.
Volume downsample_linear(const Volume& v, int factor = 2);

/// v + N(0, sigma^2) per voxel, seeded; metadata preserved.
Volume add_gaussian_noise(const Volume& v, double sigma, std::uint64_t seed);

/// JSON manifest: {"volumes": [{"path": "...", "split": "train"|"test"}]}.
struct DatasetManifest {
  struct Entry {
    std::string path;
    std::string split;
  };
  std::vector<Entry> volumes;

  static DatasetManifest load(const std::string& path);
  std::vector<std::string> paths(const std::string& split) const;
};

/// Deterministic batch stream over the patch grid of a volume set. Sampling
/// is a seeded permutation without replacement, reshuffled each epoch; the
/// batch for a given iteration is a pure function of (seed, iteration), which
/// makes resume trivial. When noise_sigma > 0 the degradation noise is
/// applied once per volume at full HR scale before any patch is cut.
class BatchIterator {
 public:
  BatchIterator(std::vector<Volume> volumes, int hr_patch, int stride, int batch_size,
                std::uint64_t seed, double noise_sigma = 0.0);

  std::vector<PatchPair> batch(std::int64_t iteration) const;

  std::int64_t patches_per_epoch() const { return std::int64_t(index_.size()); }
  std::int64_t batches_per_epoch() const {
    return (patches_per_epoch() + batch_size_ - 1) / batch_size_;
  }

 private:
  std::vector<Volume> volumes_;
  std::vector<std::pair<int, std::array<int, 3>>> index_;  // (volume, origin)
  int hr_patch_;
  int batch_size_;
  std::uint64_t seed_;
  float noise_sigma_;
};

}  // namespace disgan
