#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "disgan/errors.hpp"
#include "disgan/volume.hpp"

namespace disgan {

/// The eight sub-bands of one 3D Haar level. Band index bits are
/// (depth, height, width) with L=0 / H=1, i.e. lll=0, llh=1, lhl=2, lhh=3,
/// hll=4, hlh=5, hhl=6, hhh=7. Each band has shape (D/2, H/2, W/2).
struct SubbandSet {
  std::array<int, 3> band_shape{0, 0, 0};
  std::array<std::vector<float>, 8> bands;

  static constexpr std::array<const char*, 8> kBandNames = {
      "lll", "llh", "lhl", "lhh", "hll", "hlh", "hhl", "hhh"};

  std::int64_t band_numel() const {
    return std::int64_t(band_shape[0]) * band_shape[1] * band_shape[2];
  }
};

// Orthonormal Haar pair: low = (a+b)/sqrt(2), high = (a-b)/sqrt(2), applied
// along depth, height, then width. Since the pairs are disjoint, all three
// stages reduce to one 8x8 orthonormal transform per 2x2x2 block; the kernel
// accumulates in double so the result matches the explicit tensor-product
// matrix to well below 1e-12.

/// Forward transform of one scalar grid. `out[band]` are 8 destination
/// grids of shape (d/2, h/2, w/2) each.
template <class T>
void dwt3_forward_grid(const T* x, int d, int h, int w, const std::array<T*, 8>& out);

/// Inverse of dwt3_forward_grid; (d, h, w) is the reconstructed shape.
template <class T>
void dwt3_inverse_grid(const std::array<const T*, 8>& bands, int d, int h, int w, T* x);

SubbandSet dwt3_forward(const Volume& v);
Volume dwt3_inverse(const SubbandSet& s);

/// Sum of squares in double with fixed order (for Parseval checks).
double energy(const std::vector<float>& v);

}  // namespace disgan
