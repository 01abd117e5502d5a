#include "disgan/metrics.hpp"

#include <cmath>
#include <vector>

#include <fftw3.h>

namespace disgan {

namespace {

void check_shapes(const Volume& x, const Volume& ref, const char* what) {
  if (x.shape != ref.shape)
    throw ShapeMismatch(std::string(what) + ": shape mismatch");
}

double mse(const Volume& x, const Volume& ref) {
  double s = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double d = double(x.voxels[std::size_t(i)]) - double(ref.voxels[std::size_t(i)]);
    s += d * d;
  }
  return s / double(x.numel());
}

// Valid-mode separable filtering along one axis of a [d][h][w] double array.
// axis: 0=depth, 1=height, 2=width. The filtered axis shrinks by taps-1.
std::vector<double> filter_axis(const std::vector<double>& in, int d, int h, int w, int axis,
                                const std::vector<double>& taps, int& od, int& oh, int& ow) {
  const int t = int(taps.size());
  od = axis == 0 ? d - t + 1 : d;
  oh = axis == 1 ? h - t + 1 : h;
  ow = axis == 2 ? w - t + 1 : w;
  std::vector<double> out(std::size_t(od) * oh * ow);
  for (int z = 0; z < od; ++z)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (int k = 0; k < t; ++k) {
          const int zz = axis == 0 ? z + k : z;
          const int yy = axis == 1 ? y + k : y;
          const int xx = axis == 2 ? x + k : x;
          acc += taps[std::size_t(k)] * in[(std::size_t(zz) * h + yy) * w + xx];
        }
        out[(std::size_t(z) * oh + y) * ow + x] = acc;
      }
  return out;
}

std::vector<double> gaussian_filter_valid(const std::vector<double>& in, int d, int h, int w,
                                          const std::vector<double>& taps) {
  int d1, h1, w1;
  auto a = filter_axis(in, d, h, w, 0, taps, d1, h1, w1);
  int d2, h2, w2;
  auto b = filter_axis(a, d1, h1, w1, 1, taps, d2, h2, w2);
  int d3, h3, w3;
  return filter_axis(b, d2, h2, w2, 2, taps, d3, h3, w3);
}

}  // namespace

double psnr(const Volume& x, const Volume& ref, double data_range) {
  check_shapes(x, ref, "psnr");
  if (!(data_range > 0.0)) throw ConfigError("psnr: data_range must be positive");
  const double m = mse(x, ref);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / m);
}

double ssim3d(const Volume& x, const Volume& ref, double data_range) {
  check_shapes(x, ref, "ssim3d");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double kK1 = 0.01, kK2 = 0.03;
  if (x.d() < kWin || x.h() < kWin || x.w() < kWin)
    throw ShapeError("ssim3d: volume smaller than the 11^3 window");
  if (!(data_range > 0.0)) throw ConfigError("ssim3d: data_range must be positive");

  std::vector<double> taps(kWin);
  double tsum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double u = (i - (kWin - 1) / 2.0) / kSigma;
    taps[std::size_t(i)] = std::exp(-0.5 * u * u);
    tsum += taps[std::size_t(i)];
  }
  for (auto& t : taps) t /= tsum;

  const int d = x.d(), h = x.h(), w = x.w();
  const std::size_t n = std::size_t(x.numel());
  std::vector<double> ax(n), ar(n), axx(n), arr(n), axr(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = x.voxels[i], b = ref.voxels[i];
    ax[i] = a;
    ar[i] = b;
    axx[i] = a * a;
    arr[i] = b * b;
    axr[i] = a * b;
  }
  const auto mx = gaussian_filter_valid(ax, d, h, w, taps);
  const auto mr = gaussian_filter_valid(ar, d, h, w, taps);
  const auto exx = gaussian_filter_valid(axx, d, h, w, taps);
  const auto err = gaussian_filter_valid(arr, d, h, w, taps);
  const auto exr = gaussian_filter_valid(axr, d, h, w, taps);

  const double c1 = (kK1 * data_range) * (kK1 * data_range);
  const double c2 = (kK2 * data_range) * (kK2 * data_range);
  double acc = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double mux = mx[i], mur = mr[i];
    const double vx = exx[i] - mux * mux;
    const double vr = err[i] - mur * mur;
    const double cov = exr[i] - mux * mur;
    acc += ((2.0 * mux * mur + c1) * (2.0 * cov + c2)) /
           ((mux * mux + mur * mur + c1) * (vx + vr + c2));
  }
  return acc / double(mx.size());
}

double nrmse(const Volume& x, const Volume& ref) {
  check_shapes(x, ref, "nrmse");
  double num = 0.0, den = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double d = double(x.voxels[std::size_t(i)]) - double(ref.voxels[std::size_t(i)]);
    num += d * d;
    den += double(ref.voxels[std::size_t(i)]) * double(ref.voxels[std::size_t(i)]);
  }
  if (den == 0.0) throw DegenerateReference("nrmse: reference has zero norm");
  return std::sqrt(num / den);
}

namespace {

// Centered magnitude spectrum |DFT3(v)| with the zero frequency shifted to
// (d/2, h/2, w/2).
std::vector<double> magnitude_spectrum(const Volume& v) {
  const int d = v.d(), h = v.h(), w = v.w();
  const std::size_t n = std::size_t(v.numel());
  fftw_complex* in = fftw_alloc_complex(n);
  fftw_complex* out = fftw_alloc_complex(n);
  for (std::size_t i = 0; i < n; ++i) {
    in[i][0] = double(v.voxels[i]);
    in[i][1] = 0.0;
  }
  fftw_plan plan = fftw_plan_dft_3d(d, h, w, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  std::vector<double> mag(n);
  for (int z = 0; z < d; ++z)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t src = (std::size_t((z + d - d / 2) % d) * h + (y + h - h / 2) % h) * w +
                                (x + w - w / 2) % w;
        mag[(std::size_t(z) * h + y) * w + x] = std::hypot(out[src][0], out[src][1]);
      }
  fftw_free(in);
  fftw_free(out);
  return mag;
}

}  // namespace

Volume freq_residual(const Volume& x, const Volume& ref, int crop) {
  check_shapes(x, ref, "freq_residual");
  if (crop < 1) throw ConfigError("freq_residual: crop must be >= 1");
  if (x.d() < crop || x.h() < crop || x.w() < crop)
    throw ShapeError("freq_residual: extents must be >= crop");
  const auto mx = magnitude_spectrum(x);
  const auto mr = magnitude_spectrum(ref);
  const int d = x.d(), h = x.h(), w = x.w();
  const int z0 = (d - crop) / 2, y0 = (h - crop) / 2, x0 = (w - crop) / 2;
  Volume out(crop, crop, crop);
  for (int z = 0; z < crop; ++z)
    for (int y = 0; y < crop; ++y)
      for (int xx = 0; xx < crop; ++xx) {
        const std::size_t i = (std::size_t(z + z0) * h + (y + y0)) * w + (xx + x0);
        out.at(z, y, xx) = float(std::abs(mx[i] - mr[i]));
      }
  return out;
}

MetricReport evaluate_volumes(const Volume& x, const Volume& ref) {
  check_shapes(x, ref, "evaluate_volumes");
  const VolumeStats rs = volume_stats(ref);
  if (!(rs.max > rs.min))
    throw DegenerateReference("evaluate_volumes: constant reference volume");
  const double inv = 1.0 / (rs.max - rs.min);
  Volume xs = x, refs = ref;
  for (auto& v : xs.voxels) v = float((double(v) - rs.min) * inv);
  for (auto& v : refs.voxels) v = float((double(v) - rs.min) * inv);
  MetricReport r;
  r.data_range = 1.0;
  r.psnr_db = psnr(xs, refs, 1.0);
  r.ssim = ssim3d(xs, refs, 1.0);
  r.nrmse = nrmse(xs, refs);
  return r;
}

}  // namespace disgan
