#include "disgan/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "disgan/rng.hpp"

namespace disgan {

std::vector<int> patch_origins_1d(int extent, int size, int stride) {
  if (extent < size)
    throw VolumeTooSmall("patch grid: extent " + std::to_string(extent) +
                         " smaller than patch size " + std::to_string(size));
  if (stride < 1) throw ConfigError("patch grid: stride must be >= 1");
  std::vector<int> origins;
  for (int o = 0; o + size <= extent; o += stride) origins.push_back(o);
  if (origins.back() + size < extent) origins.push_back(extent - size);
  return origins;
}

std::vector<std::pair<Volume, std::array<int, 3>>> extract_patches(const Volume& v, int size,
                                                                   int stride) {
  const auto oz = patch_origins_1d(v.d(), size, stride);
  const auto oy = patch_origins_1d(v.h(), size, stride);
  const auto ox = patch_origins_1d(v.w(), size, stride);
  std::vector<std::pair<Volume, std::array<int, 3>>> out;
  out.reserve(oz.size() * oy.size() * ox.size());
  for (int z : oz)
    for (int y : oy)
      for (int x : ox) {
        Volume p(size, size, size);
        p.spacing = v.spacing;
        for (int i = 0; i < size; ++i)
          for (int j = 0; j < size; ++j)
            std::copy_n(&v.at(z + i, y + j, x), size, &p.at(i, j, 0));
        out.push_back({std::move(p), {z, y, x}});
      }
  return out;
}

Volume downsample_linear(const Volume& v, int factor) {
  if (factor < 1) throw ConfigError("downsample_linear: factor must be >= 1");
  if (v.d() % factor || v.h() % factor || v.w() % factor)
    throw ShapeError("downsample_linear: extents must be divisible by factor");
  Volume out(v.d() / factor, v.h() / factor, v.w() / factor);
  out.spacing = {v.spacing[0] * factor, v.spacing[1] * factor, v.spacing[2] * factor};
  out.origin = v.origin;
  if (factor == 2) {
    for (int z = 0; z < out.d(); ++z)
      for (int y = 0; y < out.h(); ++y)
        for (int x = 0; x < out.w(); ++x) {
          double s = 0.0;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              for (int k = 0; k < 2; ++k) s += v.at(2 * z + i, 2 * y + j, 2 * x + k);
          out.at(z, y, x) = float(s * 0.125);
        }
    return out;
  }
  // Cell-center sample: for odd factors the center is a voxel, for even ones
  // the trilinear blend of the two middle voxels per axis.
  const auto sample_axis = [factor](int cell, int& i0, int& i1, double& w1) {
    const double c = cell * factor + (factor - 1) * 0.5;
    i0 = int(std::floor(c));
    i1 = std::min(i0 + 1, cell * factor + factor - 1);
    w1 = c - i0;
  };
  for (int z = 0; z < out.d(); ++z) {
    int z0, z1;
    double wz;
    sample_axis(z, z0, z1, wz);
    for (int y = 0; y < out.h(); ++y) {
      int y0, y1;
      double wy;
      sample_axis(y, y0, y1, wy);
      for (int x = 0; x < out.w(); ++x) {
        int x0, x1;
        double wx;
        sample_axis(x, x0, x1, wx);
        const double val =
            (1 - wz) * ((1 - wy) * ((1 - wx) * v.at(z0, y0, x0) + wx * v.at(z0, y0, x1)) +
                        wy * ((1 - wx) * v.at(z0, y1, x0) + wx * v.at(z0, y1, x1))) +
            wz * ((1 - wy) * ((1 - wx) * v.at(z1, y0, x0) + wx * v.at(z1, y0, x1)) +
                  wy * ((1 - wx) * v.at(z1, y1, x0) + wx * v.at(z1, y1, x1)));
        out.at(z, y, x) = float(val);
      }
    }
  }
  return out;
}

Volume add_gaussian_noise(const Volume& v, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw InvalidSigma("add_gaussian_noise: sigma must be >= 0");
  if (sigma == 0.0) return v;
  Volume out = v;
  CounterRng rng = CounterRng::keyed(seed, rng_stream::kDataNoise);
  for (auto& x : out.voxels) x += float(rng.next_gaussian() * sigma);
  return out;
}

DatasetManifest DatasetManifest::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("manifest: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest: parse error in " + path + ": " + e.what());
  }
  if (!j.contains("volumes") || !j["volumes"].is_array())
    throw ParseError("manifest: field \"volumes\" must be an array");
  DatasetManifest m;
  for (const auto& e : j["volumes"]) {
    Entry en;
    en.path = e.at("path").get<std::string>();
    en.split = e.value("split", "train");
    if (en.split != "train" && en.split != "test")
      throw ParseError("manifest: split must be \"train\" or \"test\"");
    m.volumes.push_back(en);
  }
  return m;
}

std::vector<std::string> DatasetManifest::paths(const std::string& split) const {
  std::vector<std::string> out;
  for (const auto& e : volumes)
    if (e.split == split) out.push_back(e.path);
  return out;
}

BatchIterator::BatchIterator(std::vector<Volume> volumes, int hr_patch, int stride,
                             int batch_size, std::uint64_t seed, double noise_sigma)
    : hr_patch_(hr_patch), batch_size_(batch_size), seed_(seed),
      noise_sigma_(float(noise_sigma)) {
  if (volumes.empty()) throw EmptyDataset("batch iterator: no volumes");
  if (batch_size < 1) throw ConfigError("batch iterator: batch_size must be >= 1");
  if (hr_patch < 2 || hr_patch % 2 != 0)
    throw ConfigError("batch iterator: hr_patch must be even and >= 2");
  for (std::size_t vi = 0; vi < volumes.size(); ++vi) {
    Volume vol = noise_sigma > 0.0
                     ? add_gaussian_noise(volumes[vi], noise_sigma,
                                          CounterRng::keyed(seed, rng_stream::kDataNoise, vi)
                                              .next_u64())
                     : std::move(volumes[vi]);
    const auto oz = patch_origins_1d(vol.d(), hr_patch, stride);
    const auto oy = patch_origins_1d(vol.h(), hr_patch, stride);
    const auto ox = patch_origins_1d(vol.w(), hr_patch, stride);
    for (int z : oz)
      for (int y : oy)
        for (int x : ox) index_.push_back({int(vi), {z, y, x}});
    volumes_.push_back(std::move(vol));
  }
}

std::vector<PatchPair> BatchIterator::batch(std::int64_t iteration) const {
  const std::int64_t P = patches_per_epoch();
  const std::int64_t bpe = batches_per_epoch();
  const std::int64_t epoch = iteration / bpe;
  const std::int64_t k = iteration % bpe;

  std::vector<std::int64_t> perm(static_cast<std::size_t>(P));
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng = CounterRng::keyed(seed_, rng_stream::kShuffle, std::uint64_t(epoch));
  rng.shuffle(perm);

  const std::int64_t lo = k * batch_size_;
  const std::int64_t hi = std::min(lo + batch_size_, P);
  std::vector<PatchPair> out;
  for (std::int64_t i = lo; i < hi; ++i) {
    const auto& [vi, org] = index_[std::size_t(perm[std::size_t(i)])];
    const Volume& vol = volumes_[std::size_t(vi)];
    PatchPair pp;
    pp.origin = org;
    pp.noise_sigma = noise_sigma_;
    pp.hr = Volume(hr_patch_, hr_patch_, hr_patch_);
    for (int i2 = 0; i2 < hr_patch_; ++i2)
      for (int j = 0; j < hr_patch_; ++j)
        std::copy_n(&vol.at(org[0] + i2, org[1] + j, org[2]), hr_patch_,
                    &pp.hr.at(i2, j, 0));
    pp.lr = downsample_linear(pp.hr, 2);
    out.push_back(std::move(pp));
  }
  return out;
}

}  // namespace disgan
