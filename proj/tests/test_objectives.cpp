#include <doctest.h>

#include <cmath>

#include "disgan/objectives.hpp"
#include "testutil.hpp"

using namespace disgan;

namespace {

// analytic oracles computed on a double tape, with FD gradient checks
double tape_ragan_d(const std::vector<double>& real, const std::vector<double>& fake) {
  Tape<double> t;
  Ops<double> op{t};
  TensorD r(1, 1, 1, 1, int(real.size())), f(1, 1, 1, 1, int(fake.size()));
  r.v = real;
  f.v = fake;
  return t.val(ragan_d_node(op, t.leaf(r, false), t.leaf(f, false))).v[0];
}

}  // namespace

TEST_SUITE("objectives") {

TEST_CASE("l1 pixel loss basics") {
  TensorF a(1, 1, 2, 2, 2), b(1, 1, 2, 2, 2);
  CHECK(l1_pixel(a, b) == 0.0);
  for (auto& v : a.v) v = 0.5f;
  CHECK(l1_pixel(a, b) == doctest::Approx(0.5).epsilon(1e-12));
  // half the voxels +0.2, half -0.2
  TensorF c = b;
  for (std::size_t i = 0; i < c.v.size(); ++i) c.v[i] = (i % 2 == 0) ? 0.2f : -0.2f;
  CHECK(l1_pixel(c, b) == doctest::Approx(0.2).epsilon(1e-6));
  TensorF bad(1, 1, 2, 2, 3);
  CHECK_THROWS_AS(l1_pixel(a, bad), ShapeMismatch);
}

TEST_CASE("RaGAN equal scores give 2 ln 2") {
  const std::vector<double> r(5, 3.7), f(9, 3.7);
  CHECK(std::abs(ragan_d_loss(r, f) - 2.0 * std::log(2.0)) < 1e-9);
  CHECK(std::abs(ragan_g_loss(r, f) - 2.0 * std::log(2.0)) < 1e-9);
}

TEST_CASE("RaGAN gap ln 3 gives -2 ln 0.75") {
  const double want = -2.0 * std::log(0.75);
  const std::vector<double> r(4, 1.0 + std::log(3.0)), f(4, 1.0);
  CHECK(std::abs(ragan_d_loss(r, f) - want) < 1e-9);
  // generator case: real at 0, fake at ln 3 (gap in the generator's favor)
  const std::vector<double> r2(4, 0.0), f2(4, std::log(3.0));
  CHECK(std::abs(ragan_g_loss(r2, f2) - want) < 1e-9);
}

TEST_CASE("extreme scores stay finite and tiny") {
  const std::vector<double> r(3, 40.0), f(3, -40.0);
  const double v = ragan_d_loss(r, f);
  CHECK(std::isfinite(v));
  CHECK(v >= 0.0);
  CHECK(v < 1e-10);
}

TEST_CASE("generator loss is exactly the role swap of the discriminator loss") {
  CounterRng rng(31);
  std::vector<double> r(7), f(5);
  for (auto& x : r) x = rng.uniform(-2, 2);
  for (auto& x : f) x = rng.uniform(-2, 2);
  CHECK(ragan_g_loss(r, f) == ragan_d_loss(f, r));
}

TEST_CASE("both losses are invariant to a common score shift of 17.3") {
  CounterRng rng(32);
  std::vector<double> r(6), f(8);
  for (auto& x : r) x = rng.uniform(-1, 1);
  for (auto& x : f) x = rng.uniform(-1, 1);
  auto rs = r, fs = f;
  for (auto& x : rs) x += 17.3;
  for (auto& x : fs) x += 17.3;
  CHECK(std::abs(ragan_d_loss(r, f) - ragan_d_loss(rs, fs)) < 1e-6);
  CHECK(std::abs(ragan_g_loss(r, f) - ragan_g_loss(rs, fs)) < 1e-6);
}

TEST_CASE("d loss decreases monotonically in the real-fake gap") {
  double prev = 1e300;
  for (double gap = -5.0; gap <= 5.0; gap += 0.25) {
    const double v = ragan_d_loss(std::vector<double>(4, gap), std::vector<double>(4, 0.0));
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("NaN scores are rejected") {
  CHECK_THROWS_AS(ragan_d_loss({std::nan("")}, {0.0}), InvalidScores);
  CHECK_THROWS_AS(ragan_d_loss({}, {0.0}), InvalidScores);
}

TEST_CASE("composite generator loss") {
  const LossWeights w;  // alpha 0.01, beta 0.005
  CHECK(total_g_loss(0, 0, 0, w) == 0.0);
  CHECK(std::abs(total_g_loss(1.0, 2.0, 4.0, w) - 1.04) < 1e-12);
  LossWeights zero;
  zero.alpha = 0.0;
  zero.beta = 0.0;
  CHECK(total_g_loss(0.37, 100.0, -5.0, zero) == 0.37);
  CHECK_THROWS_AS(total_g_loss(std::nan(""), 0, 0, w), InvalidLoss);
}

TEST_CASE("noise schedule anneals linearly and clamps") {
  NoiseSchedule s;
  s.total_iters = 60000;
  CHECK(instance_noise_sigma(s, 0) == 1.0);
  CHECK(instance_noise_sigma(s, 30000) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(instance_noise_sigma(s, 120000) == 0.0);
  CHECK(instance_noise_sigma(s, 60000) == 0.0);
}

TEST_CASE("instance noise: zero sigma is bit-identical, moments match") {
  TensorF x = testutil::random_tensor<float>(33, 1, 1, 8, 8, 8);
  CounterRng rng1 = CounterRng::keyed(7, rng_stream::kInstNoise);
  const TensorF same = apply_instance_noise(x, 0.0, rng1);
  CHECK(same.v == x.v);

  TensorF zeros(1, 1, 64, 64, 64);
  CounterRng rng2 = CounterRng::keyed(8, rng_stream::kInstNoise);
  const TensorF noisy = apply_instance_noise(zeros, 0.2, rng2);
  double ss = 0.0;
  for (float v : noisy.v) ss += double(v) * v;
  const double sd = std::sqrt(ss / double(noisy.numel()));
  CHECK(sd > 0.19);
  CHECK(sd < 0.21);

  CounterRng a = CounterRng::keyed(9, rng_stream::kInstNoise);
  CounterRng b = CounterRng::keyed(9, rng_stream::kInstNoise);
  CHECK(apply_instance_noise(x, 0.3, a).v == apply_instance_noise(x, 0.3, b).v);

  CounterRng c(1);
  CHECK_THROWS_AS(apply_instance_noise(x, -0.1, c), InvalidSigma);
}

TEST_CASE("tape losses match the standalone functions") {
  CounterRng rng(34);
  std::vector<double> r(24), f(24);
  for (auto& x : r) x = rng.uniform(-3, 3);
  for (auto& x : f) x = rng.uniform(-3, 3);
  CHECK(std::abs(tape_ragan_d(r, f) - ragan_d_loss(r, f)) < 1e-12);
}

TEST_CASE("RaGAN gradients match finite differences to 1e-4 (double)") {
  auto rt = testutil::random_tensor<double>(35, 2, 1, 1, 2, 3);
  auto ft = testutil::random_tensor<double>(36, 2, 1, 1, 2, 3);

  for (int variant = 0; variant < 2; ++variant) {
    Tape<double> t;
    Ops<double> op{t};
    const int rid = t.leaf(rt, true);
    const int fid = t.leaf(ft, true);
    const int loss = variant == 0 ? ragan_d_node(op, rid, fid) : ragan_g_node(op, rid, fid);
    t.backward(loss);

    const double h = 1e-6;
    for (int leaf = 0; leaf < 2; ++leaf) {
      const TensorD& base = leaf == 0 ? rt : ft;
      const TensorD& grad = t.node(leaf == 0 ? rid : fid).grad;
      for (std::int64_t i = 0; i < base.numel(); ++i) {
        const auto eval = [&](double delta) {
          auto rp = rt, fp = ft;
          (leaf == 0 ? rp : fp).v[std::size_t(i)] += delta;
          std::vector<double> rv(rp.v.begin(), rp.v.end()), fv(fp.v.begin(), fp.v.end());
          return variant == 0 ? ragan_d_loss(rv, fv) : ragan_g_loss(rv, fv);
        };
        const double fd = (eval(h) - eval(-h)) / (2 * h);
        const double an = grad.v[std::size_t(i)];
        CHECK(std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8}) < 1e-4);
      }
    }
  }
}

}
