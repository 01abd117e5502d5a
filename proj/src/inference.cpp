#include "disgan/inference.hpp"

#include <cmath>

#include "disgan/datapipe.hpp"
#include "disgan/tape.hpp"

namespace disgan {

StitchPlan plan_stitch(const std::array<int, 3>& lr_extents, int lr_patch, int lr_stride,
                       int sr_trim) {
  if (lr_patch < 8) throw ConfigError("stitch: lr_patch must be >= 8");
  if (lr_stride < 1 || lr_stride > lr_patch - sr_trim)
    throw ConfigError("stitch: need 1 <= lr_stride <= lr_patch - sr_trim");
  StitchPlan p;
  p.lr_patch = lr_patch;
  p.lr_stride = lr_stride;
  p.sr_trim = sr_trim;
  p.lr_extents = lr_extents;
  std::array<std::vector<int>, 3> axes;
  for (int a = 0; a < 3; ++a) {
    const int pad = std::max(0, lr_patch - lr_extents[std::size_t(a)]);
    if (pad >= lr_extents[std::size_t(a)])
      throw VolumeTooSmall("stitch: extent " + std::to_string(lr_extents[std::size_t(a)]) +
                           " too small to reflect-pad to patch size");
    p.padded[std::size_t(a)] = lr_extents[std::size_t(a)] + pad;
    axes[std::size_t(a)] = patch_origins_1d(p.padded[std::size_t(a)], lr_patch, lr_stride);
  }
  for (int z : axes[0])
    for (int y : axes[1])
      for (int x : axes[2]) p.origins.push_back({z, y, x});
  return p;
}

namespace {

// Trimmed local SR range of one patch along one axis: faces of the padded
// volume keep their border, interior patch faces lose sr_trim voxels.
void patch_sr_range(int origin, int patch, int padded, int trim, int& lo, int& hi) {
  lo = origin == 0 ? 0 : trim;
  hi = 2 * patch - (origin + patch == padded ? 0 : trim);
}

Volume reflect_pad(const Volume& v, const std::array<int, 3>& padded) {
  if (v.shape == padded) return v;
  Volume out(padded[0], padded[1], padded[2]);
  out.spacing = v.spacing;
  out.origin = v.origin;
  const auto reflect = [](int i, int e) { return i < e ? i : 2 * e - 2 - i; };
  for (int z = 0; z < padded[0]; ++z)
    for (int y = 0; y < padded[1]; ++y)
      for (int x = 0; x < padded[2]; ++x)
        out.at(z, y, x) = v.at(reflect(z, v.d()), reflect(y, v.h()), reflect(x, v.w()));
  return out;
}

}  // namespace

Volume stitch_counts(const StitchPlan& p) {
  Volume counts(2 * p.padded[0], 2 * p.padded[1], 2 * p.padded[2]);
  for (const auto& o : p.origins) {
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a)
      patch_sr_range(o[std::size_t(a)], p.lr_patch, p.padded[std::size_t(a)], p.sr_trim,
                     lo[a], hi[a]);
    for (int z = lo[0]; z < hi[0]; ++z)
      for (int y = lo[1]; y < hi[1]; ++y)
        for (int x = lo[2]; x < hi[2]; ++x)
          counts.at(2 * o[0] + z, 2 * o[1] + y, 2 * o[2] + x) += 1.0f;
  }
  return counts;
}

Volume stitch_super_resolve(const std::function<TensorF(const TensorF&)>& predict,
                            const Volume& lr, const StitchPlan& p) {
  require_finite(lr, "stitch input");
  const Volume padded = reflect_pad(lr, p.padded);
  Volume accum(2 * p.padded[0], 2 * p.padded[1], 2 * p.padded[2]);
  const Volume counts = stitch_counts(p);
  for (float c : counts.voxels)
    if (c < 1.0f) throw ConfigError("stitch: plan leaves voxels uncovered");

  for (const auto& o : p.origins) {
    TensorF patch(1, 1, p.lr_patch, p.lr_patch, p.lr_patch);
    for (int z = 0; z < p.lr_patch; ++z)
      for (int y = 0; y < p.lr_patch; ++y)
        for (int x = 0; x < p.lr_patch; ++x)
          patch.at(0, 0, z, y, x) = padded.at(o[0] + z, o[1] + y, o[2] + x);
    const TensorF sr = predict(patch);
    const int sp = 2 * p.lr_patch;
    if (sr.b() != 1 || sr.c() != 1 || sr.d() != sp || sr.h() != sp || sr.w() != sp)
      throw ShapeMismatch("stitch: predictor must double the patch extents");
    for (float v : sr.v)
      if (!std::isfinite(v))
        throw NumericalError("stitch: non-finite prediction from the generator");
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a)
      patch_sr_range(o[std::size_t(a)], p.lr_patch, p.padded[std::size_t(a)], p.sr_trim,
                     lo[a], hi[a]);
    for (int z = lo[0]; z < hi[0]; ++z)
      for (int y = lo[1]; y < hi[1]; ++y)
        for (int x = lo[2]; x < hi[2]; ++x)
          accum.at(2 * o[0] + z, 2 * o[1] + y, 2 * o[2] + x) += sr.at(0, 0, z, y, x);
  }

  Volume out(2 * p.lr_extents[0], 2 * p.lr_extents[1], 2 * p.lr_extents[2]);
  out.spacing = {lr.spacing[0] / 2, lr.spacing[1] / 2, lr.spacing[2] / 2};
  out.origin = lr.origin;
  for (int z = 0; z < out.d(); ++z)
    for (int y = 0; y < out.h(); ++y)
      for (int x = 0; x < out.w(); ++x)
        out.at(z, y, x) = accum.at(z, y, x) / counts.at(z, y, x);
  return out;
}

Volume trilinear_upsample2(const Volume& v) {
  Tape<float> t;
  t.grad_enabled = false;
  Ops<float> op{t};
  TensorF in(1, 1, v.d(), v.h(), v.w());
  std::copy(v.voxels.begin(), v.voxels.end(), in.v.begin());
  const TensorF& o = t.val(op.trilinear_up2(t.leaf(std::move(in), false)));
  Volume out(2 * v.d(), 2 * v.h(), 2 * v.w());
  out.spacing = {v.spacing[0] / 2, v.spacing[1] / 2, v.spacing[2] / 2};
  out.origin = v.origin;
  std::copy(o.v.begin(), o.v.end(), out.voxels.begin());
  return out;
}

Volume super_resolve(const GeneratorConfig& gcfg, ParamStore& gstore, const Volume& lr,
                     int lr_patch, int lr_stride) {
  const StitchPlan plan = plan_stitch(lr.shape, lr_patch, lr_stride);
  const auto predict = [&](const TensorF& patch) {
    Tape<float> t;
    t.grad_enabled = false;
    Ops<float> op{t};
    BoundParams<float> P{&t, &gstore, false};
    return t.val(generator_forward(op, P, gcfg, t.leaf(patch, false)));
  };
  return stitch_super_resolve(predict, lr, plan);
}

std::vector<NoiseLevelReport> noise_robustness_protocol(
    const GeneratorConfig& gcfg, ParamStore& gstore, const Volume& hr_standardized,
    const std::vector<double>& sigmas, std::uint64_t seed, int lr_patch, int lr_stride) {
  std::vector<NoiseLevelReport> out;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    const double sigma = sigmas[i];
    const Volume corrupted =
        sigma > 0.0
            ? add_gaussian_noise(hr_standardized, sigma,
                                 CounterRng::keyed(seed, rng_stream::kDataNoise, i).next_u64())
            : hr_standardized;
    const Volume lr = downsample_linear(corrupted, 2);
    const Volume sr = super_resolve(gcfg, gstore, lr, lr_patch, lr_stride);
    NoiseLevelReport r;
    r.sigma = sigma;
    r.report = evaluate_volumes(sr, hr_standardized);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace disgan
