#include <doctest.h>

#include <cmath>

#include "disgan/dwt3d.hpp"
#include "testutil.hpp"

using namespace disgan;

namespace {

// Separable 1D-at-a-time reference: applies the Haar pair along one axis.
// Used to check that any axis application order gives the same transform.
Volume haar_axis(const Volume& v, int axis) {
  const double s = 1.0 / std::sqrt(2.0);
  std::array<int, 3> os = v.shape;
  Volume out(os[0], os[1], os[2]);
  const int n = v.shape[std::size_t(axis)];
  for (int z = 0; z < (axis == 0 ? n / 2 : v.d()); ++z)
    for (int y = 0; y < (axis == 1 ? n / 2 : v.h()); ++y)
      for (int x = 0; x < (axis == 2 ? n / 2 : v.w()); ++x) {
        // low half and high half along the chosen axis
        int z0 = z, y0 = y, x0 = x, z1 = z, y1 = y, x1 = x;
        int zl = z, yl = y, xl = x, zh = z, yh = y, xh = x;
        if (axis == 0) {
          z0 = 2 * z;
          z1 = 2 * z + 1;
          zh = z + n / 2;
        } else if (axis == 1) {
          y0 = 2 * y;
          y1 = 2 * y + 1;
          yh = y + n / 2;
        } else {
          x0 = 2 * x;
          x1 = 2 * x + 1;
          xh = x + n / 2;
        }
        const double a = v.at(z0, y0, x0), b = v.at(z1, y1, x1);
        out.at(zl, yl, xl) = float((a + b) * s);
        out.at(zh, yh, xh) = float((a - b) * s);
      }
  return out;
}

// Collects the band value at (z,y,x) from the axis-ordered half-split layout.
float band_at(const Volume& t, int band, int z, int y, int x) {
  const int d2 = t.d() / 2, h2 = t.h() / 2, w2 = t.w() / 2;
  return t.at(z + ((band >> 2) & 1) * d2, y + ((band >> 1) & 1) * h2, x + (band & 1) * w2);
}

}  // namespace

TEST_SUITE("dwt3d") {

TEST_CASE("constant volume: lll = 2*sqrt(2)*c, high bands vanish") {
  Volume v(4, 4, 4);
  for (auto& x : v.voxels) x = 3.0f;
  const SubbandSet s = dwt3_forward(v);
  const float want = float(2.0 * std::sqrt(2.0) * 3.0);
  for (float x : s.bands[0]) CHECK(x == doctest::Approx(want).epsilon(1e-6));
  for (int b = 1; b < 8; ++b)
    for (float x : s.bands[std::size_t(b)]) CHECK(std::abs(x) < 1e-6f);
}

TEST_CASE("unit impulse at (0,0,0) of a 2^3 volume puts +1/(2*sqrt(2)) in every band") {
  Volume v(2, 2, 2);
  v.at(0, 0, 0) = 1.0f;
  const SubbandSet s = dwt3_forward(v);
  const float want = float(1.0 / (2.0 * std::sqrt(2.0)));
  for (int b = 0; b < 8; ++b) {
    CHECK(s.bands[std::size_t(b)].size() == 1);
    CHECK(s.bands[std::size_t(b)][0] == doctest::Approx(want).epsilon(1e-7));
  }
}

TEST_CASE("agrees with the 8x8 Haar-matrix oracle per 2x2x2 block") {
  const Volume v = testutil::random_volume(21, 8, 8, 8);
  const SubbandSet s = dwt3_forward(v);
  const auto m = testutil::haar8_matrix();
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        double block[8];
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
              block[i * 4 + j * 2 + k] = v.at(2 * z + i, 2 * y + j, 2 * x + k);
        for (int band = 0; band < 8; ++band) {
          double want = 0.0;
          for (int c = 0; c < 8; ++c) want += m[std::size_t(band)][std::size_t(c)] * block[c];
          const float got = s.bands[std::size_t(band)][std::size_t((z * 4 + y) * 4 + x)];
          CHECK(std::abs(double(got) - double(float(want))) <= 1e-12);
        }
      }
}

TEST_CASE("Parseval holds to relative 1e-6") {
  const Volume v = testutil::random_volume(22, 16, 12, 20);
  const SubbandSet s = dwt3_forward(v);
  const double ein = energy(v.voxels);
  double eout = 0.0;
  for (const auto& b : s.bands) eout += energy(b);
  CHECK(std::abs(eout - ein) / ein < 1e-6);
}

TEST_CASE("perfect reconstruction within 1e-6") {
  const Volume v = testutil::random_volume(23, 16, 16, 16);
  const Volume r = dwt3_inverse(dwt3_forward(v));
  for (std::int64_t i = 0; i < v.numel(); ++i)
    CHECK(std::abs(v.voxels[std::size_t(i)] - r.voxels[std::size_t(i)]) < 1e-6f);
}

TEST_CASE("inverse of a constant lll band is a constant volume") {
  SubbandSet s;
  s.band_shape = {2, 2, 2};
  for (int b = 0; b < 8; ++b) s.bands[std::size_t(b)].assign(8, 0.0f);
  for (auto& x : s.bands[0]) x = float(2.0 * std::sqrt(2.0));
  const Volume v = dwt3_inverse(s);
  for (float x : v.voxels) CHECK(x == doctest::Approx(1.0f).epsilon(1e-6));
}

TEST_CASE("single hhh coefficient reconstructs the transposed-oracle block") {
  SubbandSet s;
  s.band_shape = {2, 2, 2};
  for (int b = 0; b < 8; ++b) s.bands[std::size_t(b)].assign(8, 0.0f);
  s.bands[7][0] = 1.0f;  // hhh at block (0,0,0)
  const Volume v = dwt3_inverse(s);
  const auto m = testutil::haar8_matrix();
  // adjoint: x = M^T e_7, entries +-1/(2*sqrt(2)) alternating along every axis
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        const double want = m[7][std::size_t(i * 4 + j * 2 + k)];
        CHECK(v.at(i, j, k) == doctest::Approx(float(want)).epsilon(1e-7));
        const double sign = ((i + j + k) % 2 == 0) ? 1.0 : -1.0;
        CHECK(want == doctest::Approx(sign / (2.0 * std::sqrt(2.0))));
      }
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x)
        if (z >= 2 || y >= 2 || x >= 2) CHECK(v.at(z, y, x) == 0.0f);
}

TEST_CASE("axis application order does not matter") {
  const Volume v = testutil::random_volume(24, 8, 8, 8);
  // depth -> height -> width vs width -> height -> depth via the 1D reference
  const Volume dhw = haar_axis(haar_axis(haar_axis(v, 0), 1), 2);
  const Volume whd = haar_axis(haar_axis(haar_axis(v, 2), 1), 0);
  const SubbandSet s = dwt3_forward(v);
  for (std::int64_t i = 0; i < v.numel(); ++i)
    CHECK(std::abs(dhw.voxels[std::size_t(i)] - whd.voxels[std::size_t(i)]) < 1e-6f);
  // and both match the blockwise production transform
  for (int band = 0; band < 8; ++band)
    for (int z = 0; z < 4; ++z)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
          const float got = s.bands[std::size_t(band)][std::size_t((z * 4 + y) * 4 + x)];
          CHECK(std::abs(band_at(dhw, band, z, y, x) - got) < 1e-6f);
        }
}

TEST_CASE("odd extents are rejected with no implicit padding") {
  CHECK_THROWS_AS(dwt3_forward(Volume(3, 4, 4)), OddExtent);
  CHECK_THROWS_AS(dwt3_forward(Volume(4, 4, 5)), OddExtent);
}

TEST_CASE("mismatched band shapes are rejected") {
  SubbandSet s;
  s.band_shape = {2, 2, 2};
  for (int b = 0; b < 8; ++b) s.bands[std::size_t(b)].assign(8, 0.0f);
  s.bands[3].resize(7);
  CHECK_THROWS_AS(dwt3_inverse(s), ShapeMismatch);
}

}
