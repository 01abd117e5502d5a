#include "disgan/dwt3d.hpp"

namespace disgan {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;

void check_even(int d, int h, int w) {
  if (d < 2 || h < 2 || w < 2 || d % 2 || h % 2 || w % 2)
    throw OddExtent("dwt3: extents must be even and >= 2, got (" + std::to_string(d) + "," +
                    std::to_string(h) + "," + std::to_string(w) + ")");
}
}  // namespace

template <class T>
void dwt3_forward_grid(const T* x, int d, int h, int w, const std::array<T*, 8>& out) {
  check_even(d, h, w);
  const int d2 = d / 2, h2 = h / 2, w2 = w / 2;
  for (int z = 0; z < d2; ++z)
    for (int y = 0; y < h2; ++y)
      for (int xx = 0; xx < w2; ++xx) {
        double a[8];
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
              a[i * 4 + j * 2 + k] =
                  double(x[(std::size_t(2 * z + i) * h + (2 * y + j)) * w + (2 * xx + k)]);
        double b[8];
        // depth stage
        for (int m = 0; m < 4; ++m) {
          b[m] = (a[m] + a[m + 4]) * kInvSqrt2;
          b[m + 4] = (a[m] - a[m + 4]) * kInvSqrt2;
        }
        // height stage
        for (int i = 0; i < 8; i += 4)
          for (int k = 0; k < 2; ++k) {
            const double lo = (b[i + k] + b[i + k + 2]) * kInvSqrt2;
            const double hi = (b[i + k] - b[i + k + 2]) * kInvSqrt2;
            b[i + k] = lo;
            b[i + k + 2] = hi;
          }
        // width stage
        for (int i = 0; i < 8; i += 2) {
          const double lo = (b[i] + b[i + 1]) * kInvSqrt2;
          const double hi = (b[i] - b[i + 1]) * kInvSqrt2;
          b[i] = lo;
          b[i + 1] = hi;
        }
        const std::size_t o = (std::size_t(z) * h2 + y) * w2 + xx;
        for (int band = 0; band < 8; ++band) out[band][o] = T(b[band]);
      }
}

template <class T>
void dwt3_inverse_grid(const std::array<const T*, 8>& bands, int d, int h, int w, T* x) {
  check_even(d, h, w);
  const int d2 = d / 2, h2 = h / 2, w2 = w / 2;
  for (int z = 0; z < d2; ++z)
    for (int y = 0; y < h2; ++y)
      for (int xx = 0; xx < w2; ++xx) {
        const std::size_t o = (std::size_t(z) * h2 + y) * w2 + xx;
        double b[8];
        for (int band = 0; band < 8; ++band) b[band] = double(bands[band][o]);
        // inverse width stage
        for (int i = 0; i < 8; i += 2) {
          const double p = (b[i] + b[i + 1]) * kInvSqrt2;
          const double q = (b[i] - b[i + 1]) * kInvSqrt2;
          b[i] = p;
          b[i + 1] = q;
        }
        // inverse height stage
        for (int i = 0; i < 8; i += 4)
          for (int k = 0; k < 2; ++k) {
            const double p = (b[i + k] + b[i + k + 2]) * kInvSqrt2;
            const double q = (b[i + k] - b[i + k + 2]) * kInvSqrt2;
            b[i + k] = p;
            b[i + k + 2] = q;
          }
        // inverse depth stage
        for (int m = 0; m < 4; ++m) {
          const double p = (b[m] + b[m + 4]) * kInvSqrt2;
          const double q = (b[m] - b[m + 4]) * kInvSqrt2;
          b[m] = p;
          b[m + 4] = q;
        }
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
              x[(std::size_t(2 * z + i) * h + (2 * y + j)) * w + (2 * xx + k)] =
                  T(b[i * 4 + j * 2 + k]);
      }
}

template void dwt3_forward_grid<float>(const float*, int, int, int, const std::array<float*, 8>&);
template void dwt3_forward_grid<double>(const double*, int, int, int, const std::array<double*, 8>&);
template void dwt3_inverse_grid<float>(const std::array<const float*, 8>&, int, int, int, float*);
template void dwt3_inverse_grid<double>(const std::array<const double*, 8>&, int, int, int, double*);

SubbandSet dwt3_forward(const Volume& v) {
  check_even(v.d(), v.h(), v.w());
  SubbandSet s;
  s.band_shape = {v.d() / 2, v.h() / 2, v.w() / 2};
  std::array<float*, 8> ptrs{};
  for (int b = 0; b < 8; ++b) {
    s.bands[b].assign(std::size_t(s.band_numel()), 0.0f);
    ptrs[b] = s.bands[b].data();
  }
  dwt3_forward_grid(v.voxels.data(), v.d(), v.h(), v.w(), ptrs);
  return s;
}

Volume dwt3_inverse(const SubbandSet& s) {
  const std::size_t n = std::size_t(s.band_numel());
  for (int b = 0; b < 8; ++b)
    if (s.bands[b].size() != n)
      throw ShapeMismatch("dwt3_inverse: band " + std::string(SubbandSet::kBandNames[b]) +
                          " size mismatch");
  Volume v(s.band_shape[0] * 2, s.band_shape[1] * 2, s.band_shape[2] * 2);
  std::array<const float*, 8> ptrs{};
  for (int b = 0; b < 8; ++b) ptrs[b] = s.bands[b].data();
  dwt3_inverse_grid(ptrs, v.d(), v.h(), v.w(), v.voxels.data());
  return v;
}

double energy(const std::vector<float>& v) {
  double e = 0.0;
  for (float x : v) e += double(x) * double(x);
  return e;
}

}  // namespace disgan
