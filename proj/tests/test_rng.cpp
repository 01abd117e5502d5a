#include <doctest.h>

#include <cmath>
#include <set>

#include "disgan/rng.hpp"

using disgan::CounterRng;

TEST_SUITE("rng") {

TEST_CASE("same seed gives identical streams") {
  CounterRng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("known splitmix64 values") {
  // Reference sequence for seed 0 (state advances by the golden gamma, then
  // avalanche mix); frozen here to catch accidental algorithm changes.
  CounterRng r(0);
  CHECK(r.next_u64() == 0xE220A8397B1DCDAFULL);
  CHECK(r.next_u64() == 0x6E789E6AA1B965F4ULL);
  CHECK(r.next_u64() == 0x06C45D188009454FULL);
}

TEST_CASE("keyed streams are independent") {
  CounterRng a = CounterRng::keyed(7, 1), b = CounterRng::keyed(7, 2);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("uniform doubles lie in [0,1)") {
  CounterRng r(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("gaussian moments") {
  CounterRng r(11);
  const int n = 200000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = r.next_gaussian();
    s += g;
    ss += g * g;
  }
  const double mean = s / n;
  const double var = ss / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("shuffle is a permutation") {
  CounterRng r(5);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[std::size_t(i)] = i;
  r.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  CHECK(s.size() == 100);
}

}
