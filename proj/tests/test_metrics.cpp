#include <doctest.h>

#include <cmath>

#include "disgan/metrics.hpp"
#include "testutil.hpp"

using namespace disgan;

namespace {

// Independent per-window SSIM: explicit triple loop over every valid window
// position with the same Gaussian taps, no separable filtering.
double ssim3d_bruteforce(const Volume& x, const Volume& ref, double range) {
  const int win = 11;
  std::vector<double> taps(win);
  double ts = 0.0;
  for (int i = 0; i < win; ++i) {
    const double u = (i - 5.0) / 1.5;
    taps[std::size_t(i)] = std::exp(-0.5 * u * u);
    ts += taps[std::size_t(i)];
  }
  for (auto& t : taps) t /= ts;
  const double c1 = (0.01 * range) * (0.01 * range), c2 = (0.03 * range) * (0.03 * range);

  double acc = 0.0;
  std::int64_t count = 0;
  for (int z = 0; z + win <= x.d(); ++z)
    for (int y = 0; y + win <= x.h(); ++y)
      for (int xx = 0; xx + win <= x.w(); ++xx) {
        double mx = 0, mr = 0, exx = 0, err = 0, exr = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j)
            for (int k = 0; k < win; ++k) {
              const double w = taps[std::size_t(i)] * taps[std::size_t(j)] * taps[std::size_t(k)];
              const double a = x.at(z + i, y + j, xx + k);
              const double b = ref.at(z + i, y + j, xx + k);
              mx += w * a;
              mr += w * b;
              exx += w * a * a;
              err += w * b * b;
              exr += w * a * b;
            }
        const double vx = exx - mx * mx, vr = err - mr * mr, cov = exr - mx * mr;
        acc += ((2 * mx * mr + c1) * (2 * cov + c2)) / ((mx * mx + mr * mr + c1) * (vx + vr + c2));
        ++count;
      }
  return acc / double(count);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("psnr: sentinel, 20 dB offset case, +6.0206 dB on halved error") {
  const Volume ref = testutil::random_volume(51, 12, 12, 12, 0.0f, 1.0f);
  CHECK(std::isinf(psnr(ref, ref, 1.0)));

  Volume x = ref;
  for (auto& v : x.voxels) v += 0.1f;
  CHECK(psnr(x, ref, 1.0) == doctest::Approx(20.0).epsilon(1e-6));

  Volume half = ref;
  for (auto& v : half.voxels) v += 0.05f;
  CHECK(psnr(half, ref, 1.0) - psnr(x, ref, 1.0) ==
        doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-5));
}

TEST_CASE("psnr decreases monotonically with growing uniform error") {
  const Volume ref = testutil::random_volume(52, 8, 8, 8, 0.0f, 1.0f);
  double prev = 1e300;
  for (float off = 0.05f; off < 0.5f; off += 0.05f) {
    Volume x = ref;
    for (auto& v : x.voxels) v += off;
    const double p = psnr(x, ref, 1.0);
    CHECK(p < prev);
    prev = p;
  }
  CHECK_THROWS_AS(psnr(ref, Volume(4, 8, 8), 1.0), ShapeMismatch);
  CHECK_THROWS_AS(psnr(ref, ref, 0.0), ConfigError);
}

TEST_CASE("ssim: identical volumes give exactly 1") {
  const Volume v = testutil::random_volume(53, 14, 14, 14, 0.0f, 1.0f);
  CHECK(ssim3d(v, v, 1.0) == 1.0);
}

TEST_CASE("ssim: disjoint constants give the closed form C1/(1+C1)") {
  Volume x(12, 12, 12), ref(12, 12, 12);
  for (auto& v : ref.voxels) v = 1.0f;
  const double want = 1e-4 / 1.0001;
  CHECK(std::abs(ssim3d(x, ref, 1.0) - want) < 1e-9);
}

TEST_CASE("ssim matches the brute-force window oracle on 10 seeded pairs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Volume a = testutil::random_volume(100 + seed, 16, 16, 16, 0.0f, 1.0f);
    Volume b = testutil::random_volume(200 + seed, 16, 16, 16, 0.0f, 1.0f);
    // correlate b with a so the covariance term is exercised
    for (std::int64_t i = 0; i < b.numel(); ++i)
      b.voxels[std::size_t(i)] =
          0.7f * a.voxels[std::size_t(i)] + 0.3f * b.voxels[std::size_t(i)];
    CHECK(std::abs(ssim3d(a, b, 1.0) - ssim3d_bruteforce(a, b, 1.0)) < 1e-6);
  }
}

TEST_CASE("ssim is symmetric and fails below the window size") {
  const Volume a = testutil::random_volume(54, 13, 13, 13, 0.0f, 1.0f);
  const Volume b = testutil::random_volume(55, 13, 13, 13, 0.0f, 1.0f);
  CHECK(std::abs(ssim3d(a, b, 1.0) - ssim3d(b, a, 1.0)) < 1e-9);
  CHECK_THROWS_AS(ssim3d(Volume(10, 12, 12), Volume(10, 12, 12), 1.0), ShapeError);
}

TEST_CASE("nrmse: identity, constant offset, scale invariance") {
  const Volume ref0 = testutil::random_volume(56, 10, 10, 10, 0.5f, 1.5f);
  CHECK(nrmse(ref0, ref0) == 0.0);

  Volume ref(10, 10, 10), x(10, 10, 10);
  for (auto& v : ref.voxels) v = 1.0f;
  for (auto& v : x.voxels) v = 1.1f;
  CHECK(nrmse(x, ref) == doctest::Approx(0.1).epsilon(1e-6));

  const Volume a = testutil::random_volume(57, 8, 8, 8, 0.1f, 1.0f);
  const Volume b = testutil::random_volume(58, 8, 8, 8, 0.1f, 1.0f);
  Volume a2 = a, b2 = b;
  for (auto& v : a2.voxels) v *= 2.0f;
  for (auto& v : b2.voxels) v *= 2.0f;
  CHECK(std::abs(nrmse(a2, b2) - nrmse(a, b)) < 1e-6);

  CHECK_THROWS_AS(nrmse(a, Volume(8, 8, 8)), DegenerateReference);
}

TEST_CASE("frequency residual: identity, DC impulse, shift invariance") {
  const Volume v = testutil::random_volume(59, 64, 64, 64, 0.0f, 1.0f);
  const Volume zero_res = freq_residual(v, v, 50);
  CHECK(zero_res.shape == std::array<int, 3>{50, 50, 50});
  for (float x : zero_res.voxels) CHECK(x == 0.0f);

  // constant 1 vs 0: the residual is N at the center voxel, ~0 elsewhere
  Volume ones(64, 64, 64), zeros(64, 64, 64);
  for (auto& x : ones.voxels) x = 1.0f;
  const Volume res = freq_residual(zeros, ones, 50);
  const double n = double(ones.numel());
  CHECK(res.at(25, 25, 25) == doctest::Approx(float(n)).epsilon(1e-9));
  double off_center_max = 0.0;
  for (int z = 0; z < 50; ++z)
    for (int y = 0; y < 50; ++y)
      for (int x = 0; x < 50; ++x)
        if (z != 25 || y != 25 || x != 25)
          off_center_max = std::max(off_center_max, double(res.at(z, y, x)));
  CHECK(off_center_max < 1e-9 * n);

  // circular shift leaves the magnitude spectrum unchanged
  Volume shifted(64, 64, 64);
  for (int z = 0; z < 64; ++z)
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) shifted.at(z, y, x) = v.at((z + 3) % 64, y, x);
  const Volume shift_res = freq_residual(shifted, v, 50);
  for (float x : shift_res.voxels) CHECK(double(x) < 1e-3 * n);

  CHECK_THROWS_AS(freq_residual(Volume(32, 64, 64), Volume(32, 64, 64), 50), ShapeError);
}

TEST_CASE("evaluation convention: reference min-max rescale, range 1") {
  Volume ref = testutil::random_volume(60, 16, 16, 16, -3.0f, 5.0f);
  ref.voxels[0] = -3.0f;  // pin the reference range to exactly [-3, 5]
  ref.voxels[1] = 5.0f;
  Volume x = ref;
  for (auto& v : x.voxels) v += 0.8f;  // offset = 0.1 of the 8-unit range
  const MetricReport r = evaluate_volumes(x, ref);
  CHECK(r.data_range == 1.0);
  CHECK(r.convention == "ref-minmax[0,1]");
  CHECK(r.psnr_db == doctest::Approx(20.0).epsilon(1e-4));

  const MetricReport perfect = evaluate_volumes(ref, ref);
  CHECK(perfect.psnr_is_inf());
  CHECK(perfect.ssim == 1.0);
  CHECK(perfect.nrmse == 0.0);
  CHECK(perfect.to_json()["psnr_db"] == "inf");

  Volume flat(16, 16, 16);
  CHECK_THROWS_AS(evaluate_volumes(x, flat), DegenerateReference);
}

}
