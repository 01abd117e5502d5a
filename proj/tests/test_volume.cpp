#include <doctest.h>

#include <cmath>

#include "disgan/volume.hpp"
#include "testutil.hpp"

using namespace disgan;

TEST_SUITE("volume") {

TEST_CASE("standardize leaves a standardized volume unchanged") {
  Volume v = testutil::random_volume(1, 16, 16, 16);
  const Volume s1 = standardize(v);
  const Volume s2 = standardize(s1);
  for (std::int64_t i = 0; i < s1.numel(); ++i)
    CHECK(std::abs(s1.voxels[std::size_t(i)] - s2.voxels[std::size_t(i)]) < 1e-4);
}

TEST_CASE("constant volume is rejected") {
  Volume v(8, 8, 8);
  for (auto& x : v.voxels) x = 5.0f;
  CHECK_THROWS_AS(standardize(v), DegenerateVolume);
}

TEST_CASE("seeded uniform volume standardizes to mean 0 / std 1") {
  Volume v = testutil::random_volume(99, 32, 32, 32, 0.0f, 10.0f);
  const Volume s = standardize(v);
  // independent two-pass moment oracle
  double sum = 0.0;
  for (float x : s.voxels) sum += x;
  const double mean = sum / double(s.numel());
  double ss = 0.0;
  for (float x : s.voxels) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / double(s.numel()));
  CHECK(std::abs(mean) < 1e-5);
  CHECK(std::abs(sd - 1.0) < 1e-4);
  CHECK(s.shape == v.shape);
  CHECK(s.spacing == v.spacing);
}

TEST_CASE("stats invariants") {
  Volume v = testutil::random_volume(5, 12, 10, 14, -3.0f, 7.0f);
  const VolumeStats s = volume_stats(v);
  CHECK(s.std >= 0.0);
  CHECK(s.min <= s.mean);
  CHECK(s.mean <= s.max);
}

TEST_CASE("phantom is deterministic per seed") {
  const Volume a = phantom_cube(7, 64);
  const Volume b = phantom_cube(7, 64);
  CHECK(a.voxels == b.voxels);
}

TEST_CASE("phantoms from different seeds differ in > 10% of voxels") {
  const Volume a = phantom_cube(7, 64);
  const Volume b = phantom_cube(8, 64);
  std::int64_t diff = 0;
  for (std::size_t i = 0; i < a.voxels.size(); ++i)
    if (std::abs(a.voxels[i] - b.voxels[i]) > 1e-3f) ++diff;
  CHECK(double(diff) / double(a.numel()) > 0.10);
}

TEST_CASE("phantom values stay in [0,1] and volume is non-degenerate") {
  const Volume v = phantom(3, {32, 48, 34});
  float mn = 1e9f, mx = -1e9f;
  for (float x : v.voxels) {
    mn = std::min(mn, x);
    mx = std::max(mx, x);
  }
  CHECK(mn >= 0.0f);
  CHECK(mx <= 1.0f);
  CHECK(volume_stats(v).std > 1e-3);
}

TEST_CASE("phantom rejects bad extents") {
  CHECK_THROWS_AS(phantom_cube(1, 31), InvalidSize);
  CHECK_THROWS_AS(phantom(1, {64, 33, 64}), InvalidSize);
  CHECK_THROWS_AS(phantom_cube(1, 30), InvalidSize);
}

}
