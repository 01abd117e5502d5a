#pragma once

#include <unistd.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "disgan/rng.hpp"
#include "disgan/tensor.hpp"
#include "disgan/volume.hpp"

namespace testutil {

/// Unique scratch directory under the system temp dir, removed on destruction.
struct TmpDir {
  std::filesystem::path path;
  TmpDir() {
    static std::uint64_t counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("disgan_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline disgan::Volume random_volume(std::uint64_t seed, int d, int h, int w, float lo = -1.0f,
                                    float hi = 1.0f) {
  disgan::Volume v(d, h, w);
  disgan::CounterRng rng(seed);
  for (auto& x : v.voxels) x = lo + (hi - lo) * rng.next_float();
  return v;
}

template <class T>
disgan::TensorT<T> random_tensor(std::uint64_t seed, int b, int c, int d, int h, int w,
                                 T lo = T(-1), T hi = T(1)) {
  disgan::TensorT<T> t(b, c, d, h, w);
  disgan::CounterRng rng(seed);
  for (auto& x : t.v) x = T(lo + (hi - lo) * T(rng.next_double()));
  return t;
}

/// The 8x8 orthonormal Haar matrix as the Kronecker cube of [[1,1],[1,-1]]/sqrt(2).
/// Row index = band (depth,height,width bits), column index = block offset
/// (i*4 + j*2 + k).
inline std::array<std::array<double, 8>, 8> haar8_matrix() {
  const double s = 1.0 / std::sqrt(2.0);
  const double h2[2][2] = {{s, s}, {s, -s}};
  std::array<std::array<double, 8>, 8> m{};
  for (int bd = 0; bd < 2; ++bd)
    for (int bh = 0; bh < 2; ++bh)
      for (int bw = 0; bw < 2; ++bw)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
              m[std::size_t(bd * 4 + bh * 2 + bw)][std::size_t(i * 4 + j * 2 + k)] =
                  h2[bd][i] * h2[bh][j] * h2[bw][k];
  return m;
}

inline double rel_err(double got, double want) {
  const double denom = std::max(std::abs(got), std::abs(want));
  return denom == 0.0 ? 0.0 : std::abs(got - want) / denom;
}

}  // namespace testutil
