#include <doctest.h>

#include <cmath>
#include <functional>

#include "disgan/conv_kernels.hpp"
#include "disgan/tape.hpp"
#include "testutil.hpp"

using namespace disgan;

namespace {

using Builder = std::function<int(Ops<double>&, const std::vector<int>&)>;

double eval_scalar(const std::vector<TensorD>& leaves, const Builder& build) {
  Tape<double> t;
  Ops<double> op{t};
  std::vector<int> ids;
  for (const auto& l : leaves) ids.push_back(t.leaf(l, true));
  return t.val(build(op, ids)).v[0];
}

/// Central finite differences on a double tape against the analytic backward.
void gradcheck(std::vector<TensorD> leaves, const Builder& build, double h = 1e-5,
               double tol = 1e-6) {
  Tape<double> t;
  Ops<double> op{t};
  std::vector<int> ids;
  for (const auto& l : leaves) ids.push_back(t.leaf(l, true));
  const int root = build(op, ids);
  t.backward(root);

  for (std::size_t li = 0; li < leaves.size(); ++li) {
    const TensorD& g = t.node(ids[li]).grad;
    REQUIRE(g.numel() == leaves[li].numel());
    for (std::int64_t i = 0; i < leaves[li].numel(); ++i) {
      auto plus = leaves;
      auto minus = leaves;
      plus[li].v[std::size_t(i)] += h;
      minus[li].v[std::size_t(i)] -= h;
      const double fd = (eval_scalar(plus, build) - eval_scalar(minus, build)) / (2 * h);
      const double an = g.v[std::size_t(i)];
      const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
      if (err >= tol) {
        CAPTURE(li);
        CAPTURE(i);
        CAPTURE(fd);
        CAPTURE(an);
      }
      CHECK(err < tol);
    }
  }
}

}  // namespace

TEST_SUITE("tape") {

TEST_CASE("conv3 forward matches a dense direct loop") {
  // single sample, zero padding, 3^3 kernel
  const auto x = testutil::random_tensor<float>(1, 1, 3, 4, 4, 4);
  const auto w = testutil::random_tensor<float>(2, 2, 3 * 27, 1, 1, 1);  // raw storage
  TensorF wv(2, 3, 3, 3, 3);
  std::copy_n(w.v.begin(), wv.v.size(), wv.v.begin());
  TensorF bv(2, 1, 1, 1, 1);
  bv.v = {0.3f, -0.1f};

  Tape<float> t;
  Ops<float> op{t};
  const int xid = t.leaf(x, false);
  const int out = op.conv3({xid}, t.leaf(wv, false), t.leaf(bv, false));

  for (int co = 0; co < 2; ++co)
    for (int z = 0; z < 4; ++z)
      for (int y = 0; y < 4; ++y)
        for (int xx = 0; xx < 4; ++xx) {
          double want = bv.v[std::size_t(co)];
          for (int ci = 0; ci < 3; ++ci)
            for (int dz = 0; dz < 3; ++dz)
              for (int dy = 0; dy < 3; ++dy)
                for (int dx = 0; dx < 3; ++dx) {
                  const int sz = z + dz - 1, sy = y + dy - 1, sx = xx + dx - 1;
                  if (sz < 0 || sz >= 4 || sy < 0 || sy >= 4 || sx < 0 || sx >= 4) continue;
                  want += double(wv.at(co, ci, dz, dy, dx)) * double(x.at(0, ci, sz, sy, sx));
                }
          CHECK(t.val(out).at(0, co, z, y, xx) == doctest::Approx(float(want)).epsilon(1e-4));
        }
}

TEST_CASE("avx and generic conv kernels agree") {
  const int ci = 5, co = 7, d = 6, h = 6, w = 18;
  std::vector<float> xpad(std::size_t(kern::padded_size(ci, d, h, w)), 0.0f);
  CounterRng rng(4);
  // fill interior only, halo stays zero
  for (int c = 0; c < ci; ++c)
    for (int z = 1; z <= d; ++z)
      for (int y = 1; y <= h; ++y)
        for (int x = 1; x <= w; ++x)
          xpad[((std::size_t(c) * (d + 2) + z) * (h + 2) + y) * (w + 2) + x] =
              rng.next_float() - 0.5f;
  std::vector<float> wgt(std::size_t(co) * ci * 27), bias(co);
  for (auto& v : wgt) v = rng.next_float() - 0.5f;
  for (auto& v : bias) v = rng.next_float();
  std::vector<float> a(std::size_t(co) * d * h * w), b(a.size());
  kern::conv3_fwd_sample(xpad.data(), ci, d, h, w, wgt.data(), bias.data(), a.data(), co);
  kern::conv3_fwd_sample_generic(xpad.data(), ci, d, h, w, wgt.data(), bias.data(), b.data(), co);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-4));

  std::vector<float> dy(a.size());
  for (auto& v : dy) v = rng.next_float() - 0.5f;
  std::vector<float> dwa(wgt.size(), 0.0f), dwb(wgt.size(), 0.0f), dba(co, 0.0f), dbb(co, 0.0f);
  kern::conv3_dw_sample(xpad.data(), dy.data(), ci, co, d, h, w, dwa.data(), dba.data());
  kern::conv3_dw_sample_generic(xpad.data(), dy.data(), ci, co, d, h, w, dwb.data(), dbb.data());
  for (std::size_t i = 0; i < dwa.size(); ++i)
    CHECK(dwa[i] == doctest::Approx(dwb[i]).epsilon(1e-3));
  for (int i = 0; i < co; ++i) CHECK(dba[std::size_t(i)] == doctest::Approx(dbb[std::size_t(i)]).epsilon(1e-3));
}

TEST_CASE("conv3 gradients (single and multi-source)") {
  const auto x = testutil::random_tensor<double>(31, 2, 2, 4, 4, 4);
  const auto y = testutil::random_tensor<double>(32, 2, 1, 4, 4, 4);
  const auto w = testutil::random_tensor<double>(33, 2, 3, 3, 3, 3);
  TensorD b(2, 1, 1, 1, 1);
  b.v = {0.1, -0.2};
  gradcheck({x, y, w, b}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.square(op.conv3({ids[0], ids[1]}, ids[2], ids[3])));
  });
}

TEST_CASE("conv1 gradients") {
  const auto x = testutil::random_tensor<double>(41, 2, 3, 2, 2, 2);
  const auto w = testutil::random_tensor<double>(42, 4, 3, 1, 1, 1);
  const auto b = testutil::random_tensor<double>(43, 4, 1, 1, 1, 1);
  gradcheck({x, w, b}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.square(op.conv1(ids[0], ids[1], ids[2])));
  });
}

TEST_CASE("elementwise op gradients") {
  // keep values away from the lrelu/abs kinks
  auto x = testutil::random_tensor<double>(51, 1, 2, 3, 3, 3);
  for (auto& v : x.v)
    if (std::abs(v) < 0.05) v = 0.2;
  gradcheck({x}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.square(op.lrelu(ids[0], 0.2)));
  });
  gradcheck({x}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.abs(ids[0]));
  });
  gradcheck({x}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.softplus(op.scale(ids[0], 3.0)));
  });
  const auto y = testutil::random_tensor<double>(52, 1, 2, 3, 3, 3);
  gradcheck({x, y}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.square(op.add_scaled(ids[0], ids[1], 0.25)));
  });
}

TEST_CASE("reduction and broadcast gradients") {
  const auto x = testutil::random_tensor<double>(61, 2, 1, 2, 2, 2);
  const auto y = testutil::random_tensor<double>(62, 2, 1, 2, 2, 2);
  gradcheck({x, y}, [](Ops<double>& op, const std::vector<int>& ids) {
    const int m = op.mean_all(ids[1]);
    return op.mean_all(op.softplus(op.sub_bcast(ids[0], m)));
  });
  gradcheck({x, y}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.weighted_sum({op.mean_all(ids[0]), op.mean_all(op.square(ids[1]))}, {0.7, -1.3});
  });
}

TEST_CASE("structural op gradients") {
  const auto x = testutil::random_tensor<double>(71, 1, 8, 2, 2, 2);
  gradcheck({x}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.square(op.pixel_shuffle3(ids[0])));
  });
  gradcheck({x}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.square(op.slice_channels(ids[0], 2, 5)));
  });
  const auto y = testutil::random_tensor<double>(72, 1, 3, 2, 2, 2);
  gradcheck({x, y}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.square(op.concat_channels({ids[0], ids[1]})));
  });
  gradcheck({y}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.square(op.trilinear_up2(ids[0])));
  });
  const auto z = testutil::random_tensor<double>(73, 1, 2, 4, 4, 4);
  gradcheck({z}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.square(op.avgpool2(ids[0])));
  });
  const auto odd = testutil::random_tensor<double>(74, 1, 1, 5, 6, 7);
  gradcheck({odd}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.square(op.avgpool2(ids[0])));
  });
  gradcheck({z}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.square(op.global_avg_pool(ids[0])));
  });
}

TEST_CASE("dwt_bands: forward linearity and adjoint gradient") {
  const auto x = testutil::random_tensor<double>(81, 1, 2, 4, 4, 4);
  // gradient of sum(lll portion) via mean, against finite differences
  gradcheck({x}, [](Ops<double>& op, const std::vector<int>& ids) {
    const int bands = op.dwt_bands(ids[0]);
    return op.mean_all(op.slice_channels(bands, 0, 2));
  }, 1e-3, 1e-3);
  gradcheck({x}, [](Ops<double>& op, const std::vector<int>& ids) {
    return op.mean_all(op.square(op.dwt_bands(ids[0])));
  });

  // linearity: bands(a*x + b*y) = a*bands(x) + b*bands(y)
  const auto y = testutil::random_tensor<double>(82, 1, 2, 4, 4, 4);
  Tape<double> t;
  Ops<double> op{t};
  const int xi = t.leaf(x, false), yi = t.leaf(y, false);
  const int mix = op.add(op.scale(xi, 2.5), op.scale(yi, -1.25));
  const auto& lhs = t.val(op.dwt_bands(mix));
  const auto& bx = t.val(op.dwt_bands(xi));
  const auto& by = t.val(op.dwt_bands(yi));
  for (std::int64_t i = 0; i < lhs.numel(); ++i)
    CHECK(lhs.v[std::size_t(i)] ==
          doctest::Approx(2.5 * bx.v[std::size_t(i)] - 1.25 * by.v[std::size_t(i)]).epsilon(1e-5));
}

TEST_CASE("dwt_bands: equal channels give equal band sets") {
  TensorF x(1, 2, 4, 4, 4);
  CounterRng rng(9);
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int xx = 0; xx < 4; ++xx) {
        const float v = rng.next_float();
        x.at(0, 0, z, y, xx) = v;
        x.at(0, 1, z, y, xx) = v;
      }
  Tape<float> t;
  Ops<float> op{t};
  const auto& bands = t.val(op.dwt_bands(t.leaf(x, false)));
  for (int band = 0; band < 8; ++band)
    for (std::int64_t i = 0; i < bands.spatial(); ++i)
      CHECK(bands.slice(0, band * 2 + 0)[i] == bands.slice(0, band * 2 + 1)[i]);
}

TEST_CASE("pixel shuffle: enumerated layout, bijection, sum preservation") {
  TensorF x(1, 8, 1, 1, 1);
  for (int m = 0; m < 8; ++m) x.at(0, m, 0, 0, 0) = float(m);
  Tape<float> t;
  Ops<float> op{t};
  const auto& out = t.val(op.pixel_shuffle3(t.leaf(x, false)));
  // (z,y,x) nesting: [[[0,1],[2,3]],[[4,5],[6,7]]]
  const float want[2][2][2] = {{{0, 1}, {2, 3}}, {{4, 5}, {6, 7}}};
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < 2; ++y)
      for (int xx = 0; xx < 2; ++xx) CHECK(out.at(0, 0, z, y, xx) == want[z][y][xx]);

  const auto big = testutil::random_tensor<float>(91, 2, 16, 3, 3, 3);
  Tape<float> t2;
  Ops<float> op2{t2};
  const int src = t2.leaf(big, false);
  const auto& shuffled = t2.val(op2.pixel_shuffle3(src));
  double s_in = 0.0, s_out = 0.0;
  for (auto v : big.v) s_in += v;
  for (auto v : shuffled.v) s_out += v;
  CHECK(s_in == doctest::Approx(s_out).epsilon(1e-6));
  // invert by reading the index map back
  TensorF back(2, 16, 3, 3, 3);
  for (int b = 0; b < 2; ++b)
    for (int c = 0; c < 2; ++c)
      for (int m = 0; m < 8; ++m)
        for (int z = 0; z < 3; ++z)
          for (int y = 0; y < 3; ++y)
            for (int xx = 0; xx < 3; ++xx)
              back.at(b, c * 8 + m, z, y, xx) =
                  shuffled.at(b, c, 2 * z + (m >> 2), 2 * y + ((m >> 1) & 1), 2 * xx + (m & 1));
  CHECK(back.v == big.v);
}

TEST_CASE("trilinear up2 preserves constants and doubles extents") {
  TensorF x(1, 1, 3, 4, 5);
  for (auto& v : x.v) v = 0.7f;
  Tape<float> t;
  Ops<float> op{t};
  const auto& out = t.val(op.trilinear_up2(t.leaf(x, false)));
  CHECK(out.d() == 6);
  CHECK(out.h() == 8);
  CHECK(out.w() == 10);
  for (auto v : out.v) CHECK(v == doctest::Approx(0.7f));
}

TEST_CASE("pixel shuffle rejects channel counts not divisible by 8") {
  Tape<float> t;
  Ops<float> op{t};
  const int x = t.leaf(TensorF(1, 7, 2, 2, 2), false);
  CHECK_THROWS_AS(op.pixel_shuffle3(x), ShapeError);
}

}
