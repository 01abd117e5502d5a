#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "disgan/generator.hpp"
#include "disgan/metrics.hpp"
#include "disgan/tensor.hpp"
#include "disgan/volume.hpp"

namespace disgan {

/// Patch-grid plan for whole-volume super-resolution. Patches are predicted
/// on the (reflection-padded) LR grid, their SR outputs are accumulated with
/// uniform averaging, and a 2-voxel SR-scale border of each patch is trimmed
/// before accumulation (except along faces of the padded volume) to keep
/// patch-boundary halos out of the average.
struct StitchPlan {
  int lr_patch = 32;
  int lr_stride = 16;
  int sr_trim = 2;
  std::array<int, 3> lr_extents{0, 0, 0};   // original extents
  std::array<int, 3> padded{0, 0, 0};       // after right-side reflection pad
  std::vector<std::array<int, 3>> origins;  // on the padded grid
};

StitchPlan plan_stitch(const std::array<int, 3>& lr_extents, int lr_patch, int lr_stride,
                       int sr_trim = 2);

/// Per-voxel number of contributing patches at SR scale (padded extents x2).
Volume stitch_counts(const StitchPlan& plan);

/// Generic stitcher: `predict` maps a [1,1,p,p,p] LR patch to [1,1,2p,2p,2p].
Volume stitch_super_resolve(const std::function<TensorF(const TensorF&)>& predict,
                            const Volume& lr, const StitchPlan& plan);

/// Whole-volume trilinear x2 upsampling (half-voxel centers, edge clamp);
/// the interpolation baseline and the test stub for the stitcher.
Volume trilinear_upsample2(const Volume& v);

/// Whole-volume SR through a trained generator via overlapping patches.
Volume super_resolve(const GeneratorConfig& gcfg, ParamStore& gstore, const Volume& lr,
                     int lr_patch = 32, int lr_stride = 16);

struct NoiseLevelReport {
  double sigma = 0.0;
  MetricReport report;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["sigma"] = sigma;
    j.update(report.to_json());
    return j;
  }
};

/// Noise-robustness protocol: per level, corrupt the standardized HR volume
/// with seeded Gaussian noise, downsample x2, super-resolve, and evaluate
/// against the clean HR.
std::vector<NoiseLevelReport> noise_robustness_protocol(
    const GeneratorConfig& gcfg, ParamStore& gstore, const Volume& hr_standardized,
    const std::vector<double>& sigmas = {0.0, 0.1, 0.2, 0.3}, std::uint64_t seed = 0,
    int lr_patch = 32, int lr_stride = 16);

}  // namespace disgan
