#pragma once

#include <array>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "disgan/errors.hpp"

namespace disgan {

/// Dense rank-5 tensor in (batch, channel, depth, height, width) order,
/// row-major with width fastest. Scalars and vectors use size-1 axes.
template <class T>
struct TensorT {
  std::array<int, 5> shape{0, 0, 0, 0, 0};
  std::vector<T> v;

  TensorT() = default;
  TensorT(int b, int c, int d, int h, int w)
      : shape{b, c, d, h, w}, v(std::size_t(b) * c * d * h * w, T(0)) {}

  static TensorT scalar(T value) {
    TensorT t(1, 1, 1, 1, 1);
    t.v[0] = value;
    return t;
  }

  int b() const { return shape[0]; }
  int c() const { return shape[1]; }
  int d() const { return shape[2]; }
  int h() const { return shape[3]; }
  int w() const { return shape[4]; }

  std::int64_t numel() const {
    return std::int64_t(shape[0]) * shape[1] * shape[2] * shape[3] * shape[4];
  }
  std::int64_t spatial() const {
    return std::int64_t(shape[2]) * shape[3] * shape[4];
  }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  T& at(int b_, int c_, int z, int y, int x) {
    return v[(((std::size_t(b_) * shape[1] + c_) * shape[2] + z) * shape[3] + y) * shape[4] + x];
  }
  const T& at(int b_, int c_, int z, int y, int x) const {
    return v[(((std::size_t(b_) * shape[1] + c_) * shape[2] + z) * shape[3] + y) * shape[4] + x];
  }

  /// Pointer to the start of one (b, c) spatial slice.
  T* slice(int b_, int c_) { return data() + (std::size_t(b_) * shape[1] + c_) * spatial(); }
  const T* slice(int b_, int c_) const {
    return data() + (std::size_t(b_) * shape[1] + c_) * spatial();
  }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  std::string shape_str() const {
    std::ostringstream os;
    os << "(" << shape[0] << "," << shape[1] << "," << shape[2] << ","
       << shape[3] << "," << shape[4] << ")";
    return os.str();
  }

  template <class U>
  TensorT<U> cast() const {
    TensorT<U> o(shape[0], shape[1], shape[2], shape[3], shape[4]);
    for (std::int64_t i = 0; i < numel(); ++i) o.v[i] = U(v[i]);
    return o;
  }
};

using TensorF = TensorT<float>;
using TensorD = TensorT<double>;

inline void require_same_shape(const TensorF& a, const TensorF& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeMismatch(std::string(what) + ": shapes " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace disgan
