#pragma once

// Direct 3D convolution kernels (3x3x3 stride-1 pad-1 and 1x1x1) plus the
// packing helpers that feed them. Inputs are packed per sample into a
// zero-padded workspace [C][D+2][H+2][W+2] with kPadSlack zeroed elements of
// slack at the end, so the vector kernels may read (never write) past a row
// end.
//
// Weight layouts: 3x3x3 -> [Co][Ci][27] with tap index (dz*3+dy)*3+dx;
// 1x1x1 -> [Co][Ci]. All accumulation orders are fixed, so results are
// bit-reproducible for a given binary and machine.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace disgan::kern {

inline constexpr int kPadSlack = 32;

inline std::int64_t padded_size(int c, int d, int h, int w) {
  return std::int64_t(c) * (d + 2) * (h + 2) * (w + 2) + kPadSlack;
}

/// Copy one sample's channel segments into the padded workspace. `dst` must
/// hold padded_size(total_channels, d, h, w) elements and be zeroed once for
/// this geometry (the halo is never written afterwards).
template <class T>
void pack_padded(const std::vector<std::pair<const T*, int>>& segments,
                 int d, int h, int w, T* dst) {
  const int hp = h + 2, wp = w + 2;
  std::int64_t c0 = 0;
  for (const auto& [src, ch] : segments) {
    for (int c = 0; c < ch; ++c) {
      const T* s = src + std::int64_t(c) * d * h * w;
      T* dc = dst + (c0 + c) * std::int64_t(d + 2) * hp * wp;
      for (int z = 0; z < d; ++z)
        for (int y = 0; y < h; ++y)
          std::memcpy(dc + ((std::int64_t(z + 1) * hp) + (y + 1)) * wp + 1,
                      s + (std::int64_t(z) * h + y) * w, sizeof(T) * w);
    }
    c0 += ch;
  }
}

/// Transform weights for the input-gradient pass: swap channel axes and flip
/// taps, so the gradient is a plain forward convolution over the padded
/// output gradient.
template <class T>
std::vector<T> transpose_flip_w3(const T* w, int co, int ci) {
  std::vector<T> wt(std::size_t(co) * ci * 27);
  for (int o = 0; o < co; ++o)
    for (int i = 0; i < ci; ++i)
      for (int t = 0; t < 27; ++t)
        wt[(std::size_t(i) * co + o) * 27 + (26 - t)] = w[(std::size_t(o) * ci + i) * 27 + t];
  return wt;
}

template <class T>
std::vector<T> transpose_w1(const T* w, int co, int ci) {
  std::vector<T> wt(std::size_t(co) * ci);
  for (int o = 0; o < co; ++o)
    for (int i = 0; i < ci; ++i) wt[std::size_t(i) * co + o] = w[std::size_t(o) * ci + i];
  return wt;
}

// ---------------------------------------------------------------------------
// generic (any scalar type) reference kernels
// ---------------------------------------------------------------------------

template <class T>
void conv3_fwd_sample_generic(const T* xpad, int ci, int d, int h, int w,
                              const T* wgt, const T* bias, T* out, int co) {
  const int hp = h + 2, wp = w + 2;
  const std::int64_t cstride = std::int64_t(d + 2) * hp * wp;
  for (int o = 0; o < co; ++o)
    for (int z = 0; z < d; ++z)
      for (int y = 0; y < h; ++y) {
        T* orow = out + ((std::int64_t(o) * d + z) * h + y) * w;
        for (int x = 0; x < w; ++x) orow[x] = bias ? bias[o] : T(0);
        for (int c = 0; c < ci; ++c) {
          const T* base = xpad + c * cstride + (std::int64_t(z) * hp + y) * wp;
          const T* wp27 = wgt + (std::int64_t(o) * ci + c) * 27;
          for (int dz = 0; dz < 3; ++dz)
            for (int dy = 0; dy < 3; ++dy) {
              const T* row = base + (std::int64_t(dz) * hp + dy) * wp;
              for (int dx = 0; dx < 3; ++dx) {
                const T wv = wp27[(dz * 3 + dy) * 3 + dx];
                for (int x = 0; x < w; ++x) orow[x] += wv * row[x + dx];
              }
            }
        }
      }
}

template <class T>
void conv3_dw_sample_generic(const T* xpad, const T* dy, int ci, int co,
                             int d, int h, int w, T* dw, T* db) {
  const int hp = h + 2, wp = w + 2;
  const std::int64_t cstride = std::int64_t(d + 2) * hp * wp;
  for (int o = 0; o < co; ++o) {
    const T* dyo = dy + std::int64_t(o) * d * h * w;
    T bsum = 0;
    for (std::int64_t i = 0; i < std::int64_t(d) * h * w; ++i) bsum += dyo[i];
    db[o] += bsum;
    for (int c = 0; c < ci; ++c) {
      T* dwp = dw + (std::int64_t(o) * ci + c) * 27;
      for (int dz = 0; dz < 3; ++dz)
        for (int dy3 = 0; dy3 < 3; ++dy3)
          for (int dx = 0; dx < 3; ++dx) {
            T acc = 0;
            for (int z = 0; z < d; ++z)
              for (int y = 0; y < h; ++y) {
                const T* row = xpad + c * cstride + ((std::int64_t(z + dz) * hp) + y + dy3) * wp + dx;
                const T* dr = dyo + (std::int64_t(z) * h + y) * w;
                for (int x = 0; x < w; ++x) acc += dr[x] * row[x];
              }
            dwp[(dz * 3 + dy3) * 3 + dx] += acc;
          }
    }
  }
}

template <class T>
void conv1_fwd_sample_generic(const T* x, int ci, std::int64_t n, const T* wgt,
                              const T* bias, T* out, int co) {
  for (int o = 0; o < co; ++o) {
    T* orow = out + o * n;
    for (std::int64_t i = 0; i < n; ++i) orow[i] = bias ? bias[o] : T(0);
    for (int c = 0; c < ci; ++c) {
      const T wv = wgt[std::int64_t(o) * ci + c];
      const T* xc = x + c * n;
      for (std::int64_t i = 0; i < n; ++i) orow[i] += wv * xc[i];
    }
  }
}

template <class T>
void conv1_dw_sample_generic(const T* x, const T* dy, int ci, int co,
                             std::int64_t n, T* dw, T* db) {
  for (int o = 0; o < co; ++o) {
    const T* dyo = dy + o * n;
    T bsum = 0;
    for (std::int64_t i = 0; i < n; ++i) bsum += dyo[i];
    db[o] += bsum;
    for (int c = 0; c < ci; ++c) {
      const T* xc = x + c * n;
      T acc = 0;
      for (std::int64_t i = 0; i < n; ++i) acc += dyo[i] * xc[i];
      dw[std::int64_t(o) * ci + c] += acc;
    }
  }
}

// ---------------------------------------------------------------------------
// AVX-512 float kernels
// ---------------------------------------------------------------------------

#if defined(__AVX512F__)

namespace detail {

// W <= 16: 16-lane blocks, 8 output channels and two output rows per pass
// (the second row amortizes the weight broadcasts).
inline void conv3_fwd_w16(const float* xpad, int ci, int d, int h, int w,
                          const float* wgt, const float* bias, float* out, int co) {
  const int hp = h + 2, wp = w + 2;
  const std::int64_t cstride = std::int64_t(d + 2) * hp * wp;
  const __mmask16 smask = __mmask16((1u << w) - 1u);
  for (int co0 = 0; co0 < co; co0 += 8) {
    const int ncb = std::min(8, co - co0);
    for (int z = 0; z < d; ++z)
      for (int y = 0; y < h; y += 2) {
        const bool two = y + 1 < h;
        __m512 acc0[8], acc1[8];
        for (int cb = 0; cb < ncb; ++cb)
          acc0[cb] = acc1[cb] = _mm512_set1_ps(bias ? bias[co0 + cb] : 0.0f);
        for (int c = 0; c < ci; ++c) {
          const float* base = xpad + c * cstride + (std::int64_t(z) * hp + y) * wp;
          const float* wc = wgt + (std::int64_t(co0) * ci + c) * 27;
          for (int dz = 0; dz < 3; ++dz)
            for (int dy = 0; dy < 3; ++dy) {
              const float* row0 = base + (std::int64_t(dz) * hp + dy) * wp;
              const float* row1 = row0 + wp;
              for (int dx = 0; dx < 3; ++dx) {
                const __m512 r0 = _mm512_loadu_ps(row0 + dx);
                const __m512 r1 = two ? _mm512_loadu_ps(row1 + dx) : r0;
                const int t = (dz * 3 + dy) * 3 + dx;
                for (int cb = 0; cb < ncb; ++cb) {
                  const __m512 wv = _mm512_set1_ps(wc[std::int64_t(cb) * ci * 27 + t]);
                  acc0[cb] = _mm512_fmadd_ps(wv, r0, acc0[cb]);
                  acc1[cb] = _mm512_fmadd_ps(wv, r1, acc1[cb]);
                }
              }
            }
        }
        for (int cb = 0; cb < ncb; ++cb) {
          _mm512_mask_storeu_ps(out + ((std::int64_t(co0 + cb) * d + z) * h + y) * w, smask,
                                acc0[cb]);
          if (two)
            _mm512_mask_storeu_ps(out + ((std::int64_t(co0 + cb) * d + z) * h + y + 1) * w,
                                  smask, acc1[cb]);
        }
      }
  }
}

// W > 16: 32-lane blocks (two zmm), 4 output channels per pass.
inline void conv3_fwd_w32(const float* xpad, int ci, int d, int h, int w,
                          const float* wgt, const float* bias, float* out, int co) {
  const int hp = h + 2, wp = w + 2;
  const std::int64_t cstride = std::int64_t(d + 2) * hp * wp;
  for (int co0 = 0; co0 < co; co0 += 4) {
    const int ncb = std::min(4, co - co0);
    for (int z = 0; z < d; ++z)
      for (int y = 0; y < h; ++y)
        for (int x0 = 0; x0 < w; x0 += 32) {
          const int xn = std::min(32, w - x0);
          __m512 acc[4][2];
          for (int cb = 0; cb < ncb; ++cb)
            acc[cb][0] = acc[cb][1] = _mm512_set1_ps(bias ? bias[co0 + cb] : 0.0f);
          for (int c = 0; c < ci; ++c) {
            const float* base = xpad + c * cstride + (std::int64_t(z) * hp + y) * wp + x0;
            const float* wc = wgt + (std::int64_t(co0) * ci + c) * 27;
            for (int dz = 0; dz < 3; ++dz)
              for (int dy = 0; dy < 3; ++dy) {
                const float* row = base + (std::int64_t(dz) * hp + dy) * wp;
                for (int dx = 0; dx < 3; ++dx) {
                  const __m512 r0 = _mm512_loadu_ps(row + dx);
                  const __m512 r1 = _mm512_loadu_ps(row + dx + 16);
                  const int t = (dz * 3 + dy) * 3 + dx;
                  for (int cb = 0; cb < ncb; ++cb) {
                    const __m512 wv = _mm512_set1_ps(wc[std::int64_t(cb) * ci * 27 + t]);
                    acc[cb][0] = _mm512_fmadd_ps(wv, r0, acc[cb][0]);
                    acc[cb][1] = _mm512_fmadd_ps(wv, r1, acc[cb][1]);
                  }
                }
              }
          }
          const __mmask16 m0 = __mmask16(xn >= 16 ? 0xFFFF : (1u << xn) - 1u);
          const __mmask16 m1 = __mmask16(xn >= 32 ? 0xFFFF : (xn > 16 ? (1u << (xn - 16)) - 1u : 0));
          for (int cb = 0; cb < ncb; ++cb) {
            float* o = out + ((std::int64_t(co0 + cb) * d + z) * h + y) * w + x0;
            _mm512_mask_storeu_ps(o, m0, acc[cb][0]);
            if (m1) _mm512_mask_storeu_ps(o + 16, m1, acc[cb][1]);
          }
        }
  }
}

// Weight gradients for a block of up to 4 output channels at one (dz, dy3)
// tap row: 12 accumulators, 3 shifted input loads and <=4 masked output-grad
// loads per 16-voxel chunk.
inline void conv3_dw_tile_avx(const float* xpad_c, const float* const dy_rows[4], int ncb,
                              int d, int h, int w, int hp, int wp, int dz, int dy3,
                              float* dw_out[4]) {
  __m512 acc[4][3];
  for (int cb = 0; cb < 4; ++cb)
    acc[cb][0] = acc[cb][1] = acc[cb][2] = _mm512_setzero_ps();
  for (int z = 0; z < d; ++z)
    for (int y = 0; y < h; ++y) {
      const float* row = xpad_c + ((std::int64_t(z + dz) * hp) + y + dy3) * wp;
      const std::int64_t o = (std::int64_t(z) * h + y) * w;
      for (int x0 = 0; x0 < w; x0 += 16) {
        const int xn = std::min(16, w - x0);
        const __mmask16 m = __mmask16((xn >= 16) ? 0xFFFF : (1u << xn) - 1u);
        const __m512 xv0 = _mm512_loadu_ps(row + x0 + 0);
        const __m512 xv1 = _mm512_loadu_ps(row + x0 + 1);
        const __m512 xv2 = _mm512_loadu_ps(row + x0 + 2);
        for (int cb = 0; cb < ncb; ++cb) {
          const __m512 dv = _mm512_maskz_loadu_ps(m, dy_rows[cb] + o + x0);
          acc[cb][0] = _mm512_fmadd_ps(dv, xv0, acc[cb][0]);
          acc[cb][1] = _mm512_fmadd_ps(dv, xv1, acc[cb][1]);
          acc[cb][2] = _mm512_fmadd_ps(dv, xv2, acc[cb][2]);
        }
      }
    }
  for (int cb = 0; cb < ncb; ++cb)
    for (int dx = 0; dx < 3; ++dx)
      dw_out[cb][(dz * 3 + dy3) * 3 + dx] += _mm512_reduce_add_ps(acc[cb][dx]);
}

inline void conv1_fwd_avx(const float* x, int ci, std::int64_t n, const float* wgt,
                          const float* bias, float* out, int co) {
  for (int co0 = 0; co0 < co; co0 += 8) {
    const int ncb = std::min(8, co - co0);
    for (std::int64_t i0 = 0; i0 < n; i0 += 16) {
      const int xn = int(std::min<std::int64_t>(16, n - i0));
      const __mmask16 m = __mmask16((xn >= 16) ? 0xFFFF : (1u << xn) - 1u);
      __m512 acc[8];
      for (int cb = 0; cb < ncb; ++cb)
        acc[cb] = _mm512_set1_ps(bias ? bias[co0 + cb] : 0.0f);
      for (int c = 0; c < ci; ++c) {
        const __m512 xv = _mm512_maskz_loadu_ps(m, x + c * n + i0);
        for (int cb = 0; cb < ncb; ++cb)
          acc[cb] = _mm512_fmadd_ps(_mm512_set1_ps(wgt[std::int64_t(co0 + cb) * ci + c]), xv, acc[cb]);
      }
      for (int cb = 0; cb < ncb; ++cb)
        _mm512_mask_storeu_ps(out + (co0 + cb) * n + i0, m, acc[cb]);
    }
  }
}

inline void conv1_dw_avx(const float* x, const float* dy, int ci, int co,
                         std::int64_t n, float* dw, float* db) {
  for (int o = 0; o < co; ++o) {
    const float* dyo = dy + o * n;
    __m512 bacc = _mm512_setzero_ps();
    for (std::int64_t i0 = 0; i0 < n; i0 += 16) {
      const int xn = int(std::min<std::int64_t>(16, n - i0));
      const __mmask16 m = __mmask16((xn >= 16) ? 0xFFFF : (1u << xn) - 1u);
      bacc = _mm512_add_ps(bacc, _mm512_maskz_loadu_ps(m, dyo + i0));
    }
    db[o] += _mm512_reduce_add_ps(bacc);
    for (int c = 0; c < ci; ++c) {
      const float* xc = x + c * n;
      __m512 acc = _mm512_setzero_ps();
      for (std::int64_t i0 = 0; i0 < n; i0 += 16) {
        const int xn = int(std::min<std::int64_t>(16, n - i0));
        const __mmask16 m = __mmask16((xn >= 16) ? 0xFFFF : (1u << xn) - 1u);
        acc = _mm512_fmadd_ps(_mm512_maskz_loadu_ps(m, dyo + i0),
                              _mm512_maskz_loadu_ps(m, xc + i0), acc);
      }
      dw[std::int64_t(o) * ci + c] += _mm512_reduce_add_ps(acc);
    }
  }
}

}  // namespace detail

#endif  // __AVX512F__

// ---------------------------------------------------------------------------
// dispatching entry points (single sample)
// ---------------------------------------------------------------------------

template <class T>
void conv3_fwd_sample(const T* xpad, int ci, int d, int h, int w, const T* wgt,
                      const T* bias, T* out, int co) {
#if defined(__AVX512F__)
  if constexpr (std::is_same_v<T, float>) {
    if (w <= 16)
      detail::conv3_fwd_w16(xpad, ci, d, h, w, wgt, bias, out, co);
    else
      detail::conv3_fwd_w32(xpad, ci, d, h, w, wgt, bias, out, co);
    return;
  }
#endif
  conv3_fwd_sample_generic(xpad, ci, d, h, w, wgt, bias, out, co);
}

template <class T>
void conv3_dw_sample(const T* xpad, const T* dy, int ci, int co, int d, int h,
                     int w, T* dw, T* db) {
#if defined(__AVX512F__)
  if constexpr (std::is_same_v<T, float>) {
    const int hp = h + 2, wp = w + 2;
    const std::int64_t cstride = std::int64_t(d + 2) * hp * wp;
    const std::int64_t n = std::int64_t(d) * h * w;
    for (int o = 0; o < co; ++o) {
      const float* dyo = dy + o * n;
      __m512 bacc = _mm512_setzero_ps();
      for (std::int64_t i0 = 0; i0 < n; i0 += 16) {
        const int xn = int(std::min<std::int64_t>(16, n - i0));
        const __mmask16 m = __mmask16((xn >= 16) ? 0xFFFF : (1u << xn) - 1u);
        bacc = _mm512_add_ps(bacc, _mm512_maskz_loadu_ps(m, dyo + i0));
      }
      db[o] += _mm512_reduce_add_ps(bacc);
    }
    for (int c = 0; c < ci; ++c)
      for (int o0 = 0; o0 < co; o0 += 4) {
        const int ncb = std::min(4, co - o0);
        const float* dy_rows[4] = {nullptr, nullptr, nullptr, nullptr};
        float* dw_out[4] = {nullptr, nullptr, nullptr, nullptr};
        for (int cb = 0; cb < ncb; ++cb) {
          dy_rows[cb] = dy + (o0 + cb) * n;
          dw_out[cb] = dw + (std::int64_t(o0 + cb) * ci + c) * 27;
        }
        for (int dz = 0; dz < 3; ++dz)
          for (int dy3 = 0; dy3 < 3; ++dy3)
            detail::conv3_dw_tile_avx(xpad + c * cstride, dy_rows, ncb, d, h, w, hp, wp,
                                      dz, dy3, dw_out);
      }
    return;
  }
#endif
  conv3_dw_sample_generic(xpad, dy, ci, co, d, h, w, dw, db);
}

template <class T>
void conv1_fwd_sample(const T* x, int ci, std::int64_t n, const T* wgt,
                      const T* bias, T* out, int co) {
#if defined(__AVX512F__)
  if constexpr (std::is_same_v<T, float>) {
    detail::conv1_fwd_avx(x, ci, n, wgt, bias, out, co);
    return;
  }
#endif
  conv1_fwd_sample_generic(x, ci, n, wgt, bias, out, co);
}

template <class T>
void conv1_dw_sample(const T* x, const T* dy, int ci, int co, std::int64_t n,
                     T* dw, T* db) {
#if defined(__AVX512F__)
  if constexpr (std::is_same_v<T, float>) {
    detail::conv1_dw_avx(x, dy, ci, co, n, dw, db);
    return;
  }
#endif
  conv1_dw_sample_generic(x, dy, ci, co, n, dw, db);
}

}  // namespace disgan::kern
