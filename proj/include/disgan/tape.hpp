#pragma once

// Eager reverse-mode autodiff over rank-5 tensors. Each op computes its value
// immediately and records a backward closure; Tape::backward walks nodes in
// reverse creation order (which is a topological order by construction).
// Templated on the scalar type: float is the production path, double backs
// the finite-difference oracles in the tests.

#include <array>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <vector>

#include "disgan/conv_kernels.hpp"
#include "disgan/dwt3d.hpp"
#include "disgan/errors.hpp"
#include "disgan/tensor.hpp"

namespace disgan {

template <class T>
class Tape {
 public:
  struct Node {
    TensorT<T> val;
    TensorT<T> grad;
    bool wants_grad = false;
    std::function<void(Tape&, int)> back;
    std::shared_ptr<std::vector<T>> packed;  // cached padded conv input
  };

  bool grad_enabled = true;

  int leaf(TensorT<T> v, bool wants) {
    Node n;
    n.val = std::move(v);
    n.wants_grad = wants && grad_enabled;
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
  }

  Node& node(int id) { return nodes_[std::size_t(id)]; }
  TensorT<T>& val(int id) { return nodes_[std::size_t(id)].val; }
  const TensorT<T>& val(int id) const { return nodes_[std::size_t(id)].val; }

  /// Gradient buffer of a node, allocated (zeroed) on first use.
  TensorT<T>& grad(int id) {
    Node& n = nodes_[std::size_t(id)];
    if (n.grad.numel() == 0) {
      const auto& s = n.val.shape;
      n.grad = TensorT<T>(s[0], s[1], s[2], s[3], s[4]);
    }
    return n.grad;
  }

  bool wants(int id) const { return nodes_[std::size_t(id)].wants_grad; }

  /// Reverse sweep from a scalar root; accumulates into leaf grads.
  void backward(int root) {
    if (val(root).numel() != 1)
      throw ShapeError("backward: root must be a scalar node");
    grad(root).v[0] = T(1);
    for (int id = root; id >= 0; --id) {
      Node& n = nodes_[std::size_t(id)];
      if (n.back && n.grad.numel() != 0) n.back(*this, id);
    }
  }

  int size() const { return int(nodes_.size()); }

 protected:
  int emit(TensorT<T> v, bool wants, std::function<void(Tape&, int)> back) {
    Node n;
    n.val = std::move(v);
    n.wants_grad = wants && grad_enabled;
    if (grad_enabled && n.wants_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;

  template <class U>
  friend struct Ops;
};

/// Free-function style op set over a tape.
template <class T>
struct Ops {
  Tape<T>& t;

  // --- convolutions -------------------------------------------------------

  /// 3x3x3 stride-1 pad-1 convolution over the channel-concatenation of
  /// `srcs` (virtual concat; nothing is materialized).
  int conv3(const std::vector<int>& srcs, int wid, int bid) {
    const auto& s0 = t.val(srcs[0]);
    const int B = s0.b(), d = s0.d(), h = s0.h(), w = s0.w();
    int ci = 0;
    for (int s : srcs) {
      const auto& sv = t.val(s);
      if (sv.b() != B || sv.d() != d || sv.h() != h || sv.w() != w)
        throw ShapeMismatch("conv3: source shapes disagree");
      ci += sv.c();
    }
    const auto& wv = t.val(wid);
    const int co = wv.shape[0];
    if (wv.shape[1] != ci || wv.numel() != std::int64_t(co) * ci * 27)
      throw ShapeMismatch("conv3: weight shape does not match input channels");

    auto packed = std::make_shared<std::vector<T>>(
        std::size_t(B) * kern::padded_size(ci, d, h, w), T(0));
    const std::int64_t pstride = kern::padded_size(ci, d, h, w);
    TensorT<T> out(B, co, d, h, w);
    for (int b = 0; b < B; ++b) {
      std::vector<std::pair<const T*, int>> segs;
      for (int s : srcs) segs.push_back({t.val(s).slice(b, 0), t.val(s).c()});
      kern::pack_padded(segs, d, h, w, packed->data() + b * pstride);
      kern::conv3_fwd_sample(packed->data() + b * pstride, ci, d, h, w, wv.data(),
                             t.val(bid).data(), out.slice(b, 0), co);
    }

    bool wants = t.wants(wid) || t.wants(bid);
    for (int s : srcs) wants = wants || t.wants(s);

    std::vector<int> parents = srcs;
    const int id = t.emit(std::move(out), wants, [srcs, wid, bid, B, ci, co, d, h, w,
                                                  pstride](Tape<T>& tp, int self) {
      auto& self_node = tp.node(self);
      const TensorT<T>& dy = self_node.grad;
      const std::vector<T>& xpad = *self_node.packed;
      if (tp.wants(wid) || tp.wants(bid)) {
        TensorT<T>& dw = tp.grad(wid);
        TensorT<T>& db = tp.grad(bid);
        for (int b = 0; b < B; ++b)
          kern::conv3_dw_sample(xpad.data() + b * pstride, dy.slice(b, 0), ci, co, d, h,
                                w, dw.data(), db.data());
      }
      bool src_wants = false;
      for (int s : srcs) src_wants = src_wants || tp.wants(s);
      if (src_wants) {
        const auto wt = kern::transpose_flip_w3(tp.val(wid).data(), co, ci);
        const std::int64_t dstride = kern::padded_size(co, d, h, w);
        std::vector<T> dypad(std::size_t(B) * dstride, T(0));
        std::vector<T> dx(std::size_t(B) * ci * d * h * w);
        for (int b = 0; b < B; ++b) {
          kern::pack_padded<T>({{dy.slice(b, 0), co}}, d, h, w, dypad.data() + b * dstride);
          kern::conv3_fwd_sample(dypad.data() + b * dstride, co, d, h, w, wt.data(),
                                 static_cast<const T*>(nullptr),
                                 dx.data() + std::size_t(b) * ci * d * h * w, ci);
        }
        const std::int64_t sp = std::int64_t(d) * h * w;
        int c0 = 0;
        for (int s : srcs) {
          const int sc = tp.val(s).c();
          if (tp.wants(s)) {
            TensorT<T>& g = tp.grad(s);
            for (int b = 0; b < B; ++b)
              for (int c = 0; c < sc; ++c) {
                const T* src = dx.data() + ((std::size_t(b) * ci) + c0 + c) * sp;
                T* dst = g.slice(b, c);
                for (std::int64_t i = 0; i < sp; ++i) dst[i] += src[i];
              }
          }
          c0 += sc;
        }
      }
    });
    if (t.grad_enabled && t.node(id).wants_grad) t.node(id).packed = packed;
    return id;
  }

  /// 1x1x1 convolution (single source).
  int conv1(int src, int wid, int bid) {
    const auto& x = t.val(src);
    const int B = x.b(), ci = x.c();
    const std::int64_t n = x.spatial();
    const auto& wv = t.val(wid);
    const int co = wv.shape[0];
    if (wv.shape[1] != ci || wv.numel() != std::int64_t(co) * ci)
      throw ShapeMismatch("conv1: weight shape does not match input channels");
    TensorT<T> out(B, co, x.d(), x.h(), x.w());
    for (int b = 0; b < B; ++b)
      kern::conv1_fwd_sample(x.slice(b, 0), ci, n, wv.data(), t.val(bid).data(),
                             out.slice(b, 0), co);
    const bool wants = t.wants(src) || t.wants(wid) || t.wants(bid);
    return t.emit(std::move(out), wants, [src, wid, bid, B, ci, co, n](Tape<T>& tp, int self) {
      const TensorT<T>& dy = tp.node(self).grad;
      const TensorT<T>& x2 = tp.val(src);
      if (tp.wants(wid) || tp.wants(bid)) {
        TensorT<T>& dw = tp.grad(wid);
        TensorT<T>& db = tp.grad(bid);
        for (int b = 0; b < B; ++b)
          kern::conv1_dw_sample(x2.slice(b, 0), dy.slice(b, 0), ci, co, n, dw.data(),
                                db.data());
      }
      if (tp.wants(src)) {
        const auto wt = kern::transpose_w1(tp.val(wid).data(), co, ci);
        TensorT<T>& g = tp.grad(src);
        std::vector<T> dx(std::size_t(ci) * n);
        for (int b = 0; b < B; ++b) {
          kern::conv1_fwd_sample(dy.slice(b, 0), co, n, wt.data(),
                                 static_cast<const T*>(nullptr), dx.data(), ci);
          T* dst = g.slice(b, 0);
          for (std::size_t i = 0; i < dx.size(); ++i) dst[i] += dx[i];
        }
      }
    });
  }

  // --- elementwise --------------------------------------------------------

  int lrelu(int src, T slope) {
    const auto& x = t.val(src);
    TensorT<T> out = x;
    for (auto& v : out.v)
      if (v < T(0)) v *= slope;
    return t.emit(std::move(out), t.wants(src), [src, slope](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const auto& dy = tp.node(self).grad;
      const auto& x2 = tp.val(src);
      auto& g = tp.grad(src);
      for (std::int64_t i = 0; i < dy.numel(); ++i)
        g.v[i] += x2.v[i] > T(0) ? dy.v[i] : dy.v[i] * slope;
    });
  }

  int add(int a, int b) {
    const auto& av = t.val(a);
    const auto& bv = t.val(b);
    if (!av.same_shape(bv)) throw ShapeMismatch("add: shape mismatch");
    TensorT<T> out = av;
    for (std::int64_t i = 0; i < out.numel(); ++i) out.v[i] += bv.v[i];
    return t.emit(std::move(out), t.wants(a) || t.wants(b), [a, b](Tape<T>& tp, int self) {
      const auto& dy = tp.node(self).grad;
      for (int p : {a, b})
        if (tp.wants(p)) {
          auto& g = tp.grad(p);
          for (std::int64_t i = 0; i < dy.numel(); ++i) g.v[i] += dy.v[i];
        }
    });
  }

  int sub(int a, int b) { return add(a, scale(b, T(-1))); }

  int scale(int src, T s) {
    TensorT<T> out = t.val(src);
    for (auto& v : out.v) v *= s;
    return t.emit(std::move(out), t.wants(src), [src, s](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const auto& dy = tp.node(self).grad;
      auto& g = tp.grad(src);
      for (std::int64_t i = 0; i < dy.numel(); ++i) g.v[i] += s * dy.v[i];
    });
  }

  /// x + scale * f  (residual connection).
  int add_scaled(int x, int f, T s) { return add(x, scale(f, s)); }

  int abs(int src) {
    TensorT<T> out = t.val(src);
    for (auto& v : out.v) v = std::abs(v);
    return t.emit(std::move(out), t.wants(src), [src](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const auto& dy = tp.node(self).grad;
      const auto& x = tp.val(src);
      auto& g = tp.grad(src);
      for (std::int64_t i = 0; i < dy.numel(); ++i) {
        const T sg = x.v[i] > T(0) ? T(1) : (x.v[i] < T(0) ? T(-1) : T(0));
        g.v[i] += sg * dy.v[i];
      }
    });
  }

  int square(int src) {
    const auto& x = t.val(src);
    TensorT<T> out = x;
    for (auto& v : out.v) v *= v;
    return t.emit(std::move(out), t.wants(src), [src](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const auto& dy = tp.node(self).grad;
      const auto& x2 = tp.val(src);
      auto& g = tp.grad(src);
      for (std::int64_t i = 0; i < dy.numel(); ++i) g.v[i] += T(2) * x2.v[i] * dy.v[i];
    });
  }

  /// softplus(x) = log(1 + exp(x)), evaluated in the overflow-safe form.
  int softplus(int src) {
    const auto& x = t.val(src);
    TensorT<T> out = x;
    for (auto& v : out.v)
      v = v > T(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
    return t.emit(std::move(out), t.wants(src), [src](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const auto& dy = tp.node(self).grad;
      const auto& x2 = tp.val(src);
      auto& g = tp.grad(src);
      for (std::int64_t i = 0; i < dy.numel(); ++i) {
        const T z = x2.v[i];
        const T sig = z > T(0) ? T(1) / (T(1) + std::exp(-z))
                               : T(1) - T(1) / (T(1) + std::exp(z));
        g.v[i] += sig * dy.v[i];
      }
    });
  }

  /// Adds a fixed tensor (e.g. an instance-noise field); identity gradient.
  int add_const(int src, const TensorT<T>& c) {
    const auto& x = t.val(src);
    if (!x.same_shape(c)) throw ShapeMismatch("add_const: shape mismatch");
    TensorT<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) out.v[i] += c.v[i];
    return t.emit(std::move(out), t.wants(src), [src](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const auto& dy = tp.node(self).grad;
      auto& g = tp.grad(src);
      for (std::int64_t i = 0; i < dy.numel(); ++i) g.v[i] += dy.v[i];
    });
  }

  // --- reductions and broadcasts -----------------------------------------

  /// Mean over every element; double-precision fixed-order accumulation.
  int mean_all(int src) {
    const auto& x = t.val(src);
    double s = 0.0;
    for (auto v : x.v) s += double(v);
    const std::int64_t n = x.numel();
    TensorT<T> out = TensorT<T>::scalar(T(s / double(n)));
    return t.emit(std::move(out), t.wants(src), [src, n](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const T dy = tp.node(self).grad.v[0] / T(n);
      auto& g = tp.grad(src);
      for (std::int64_t i = 0; i < g.numel(); ++i) g.v[i] += dy;
    });
  }

  /// x - s where s is a scalar node (broadcast over x).
  int sub_bcast(int src, int scalar_id) {
    if (t.val(scalar_id).numel() != 1) throw ShapeError("sub_bcast: scalar node expected");
    const auto& x = t.val(src);
    const T s = t.val(scalar_id).v[0];
    TensorT<T> out = x;
    for (auto& v : out.v) v -= s;
    return t.emit(std::move(out), t.wants(src) || t.wants(scalar_id),
                  [src, scalar_id](Tape<T>& tp, int self) {
                    const auto& dy = tp.node(self).grad;
                    if (tp.wants(src)) {
                      auto& g = tp.grad(src);
                      for (std::int64_t i = 0; i < dy.numel(); ++i) g.v[i] += dy.v[i];
                    }
                    if (tp.wants(scalar_id)) {
                      double s2 = 0.0;
                      for (auto v : dy.v) s2 += double(v);
                      tp.grad(scalar_id).v[0] += T(-s2);
                    }
                  });
  }

  /// c0*a + c1*b for scalar nodes (loss composition).
  int weighted_sum(const std::vector<int>& ids, const std::vector<T>& coeff) {
    double s = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.val(ids[i]).numel() != 1) throw ShapeError("weighted_sum: scalar nodes expected");
      s += double(coeff[i]) * double(t.val(ids[i]).v[0]);
    }
    bool wants = false;
    for (int id : ids) wants = wants || t.wants(id);
    return t.emit(TensorT<T>::scalar(T(s)), wants, [ids, coeff](Tape<T>& tp, int self) {
      const T dy = tp.node(self).grad.v[0];
      for (std::size_t i = 0; i < ids.size(); ++i)
        if (tp.wants(ids[i])) tp.grad(ids[i]).v[0] += coeff[i] * dy;
    });
  }

  // --- structural ops -----------------------------------------------------

  int concat_channels(const std::vector<int>& srcs) {
    const auto& s0 = t.val(srcs[0]);
    int ct = 0;
    bool wants = false;
    for (int s : srcs) {
      const auto& sv = t.val(s);
      if (sv.b() != s0.b() || sv.d() != s0.d() || sv.h() != s0.h() || sv.w() != s0.w())
        throw ShapeMismatch("concat_channels: shapes disagree");
      ct += sv.c();
      wants = wants || t.wants(s);
    }
    TensorT<T> out(s0.b(), ct, s0.d(), s0.h(), s0.w());
    const std::int64_t sp = s0.spatial();
    for (int b = 0; b < s0.b(); ++b) {
      int c0 = 0;
      for (int s : srcs) {
        const auto& sv = t.val(s);
        std::memcpy(out.slice(b, c0), sv.slice(b, 0),
                    sizeof(T) * std::size_t(sp) * sv.c());
        c0 += sv.c();
      }
    }
    return t.emit(std::move(out), wants, [srcs, sp](Tape<T>& tp, int self) {
      const auto& dy = tp.node(self).grad;
      for (int b = 0; b < dy.b(); ++b) {
        int c0 = 0;
        for (int s : srcs) {
          const auto& sv = tp.val(s);
          if (tp.wants(s)) {
            auto& g = tp.grad(s);
            const T* src = dy.slice(b, c0);
            T* dst = g.slice(b, 0);
            for (std::int64_t i = 0; i < sp * sv.c(); ++i) dst[i] += src[i];
          }
          c0 += sv.c();
        }
      }
    });
  }

  int slice_channels(int src, int c0, int c1) {
    const auto& x = t.val(src);
    if (c0 < 0 || c1 > x.c() || c0 >= c1) throw ShapeError("slice_channels: bad range");
    TensorT<T> out(x.b(), c1 - c0, x.d(), x.h(), x.w());
    const std::int64_t sp = x.spatial();
    for (int b = 0; b < x.b(); ++b)
      for (int c = c0; c < c1; ++c)
        std::memcpy(out.slice(b, c - c0), x.slice(b, c), sizeof(T) * std::size_t(sp));
    return t.emit(std::move(out), t.wants(src), [src, c0, c1, sp](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const auto& dy = tp.node(self).grad;
      auto& g = tp.grad(src);
      for (int b = 0; b < dy.b(); ++b)
        for (int c = c0; c < c1; ++c) {
          const T* s = dy.slice(b, c - c0);
          T* d = g.slice(b, c);
          for (std::int64_t i = 0; i < sp; ++i) d[i] += s[i];
        }
    });
  }

  /// [B, 8c, d, h, w] -> [B, c, 2d, 2h, 2w]; channel block m of 8 maps to
  /// spatial offset (dz, dy, dx) with m = dz*4 + dy*2 + dx.
  int pixel_shuffle3(int src) {
    const auto& x = t.val(src);
    if (x.c() % 8 != 0) throw ShapeError("pixel_shuffle3: channels must be divisible by 8");
    const int B = x.b(), c = x.c() / 8, d = x.d(), h = x.h(), w = x.w();
    TensorT<T> out(B, c, 2 * d, 2 * h, 2 * w);
    for (int b = 0; b < B; ++b)
      for (int cc = 0; cc < c; ++cc)
        for (int m = 0; m < 8; ++m) {
          const int dz = m >> 2, dy = (m >> 1) & 1, dx = m & 1;
          const T* s = x.slice(b, cc * 8 + m);
          for (int z = 0; z < d; ++z)
            for (int y = 0; y < h; ++y) {
              T* o = &out.at(b, cc, 2 * z + dz, 2 * y + dy, dx);
              const T* sr = s + (std::int64_t(z) * h + y) * w;
              for (int xx = 0; xx < w; ++xx) o[2 * xx] = sr[xx];
            }
        }
    return t.emit(std::move(out), t.wants(src), [src, B, c, d, h, w](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const auto& dy_ = tp.node(self).grad;
      auto& g = tp.grad(src);
      for (int b = 0; b < B; ++b)
        for (int cc = 0; cc < c; ++cc)
          for (int m = 0; m < 8; ++m) {
            const int dz = m >> 2, dyo = (m >> 1) & 1, dx = m & 1;
            T* gs = g.slice(b, cc * 8 + m);
            for (int z = 0; z < d; ++z)
              for (int y = 0; y < h; ++y) {
                const T* o = &dy_.at(b, cc, 2 * z + dz, 2 * y + dyo, dx);
                T* gr = gs + (std::int64_t(z) * h + y) * w;
                for (int xx = 0; xx < w; ++xx) gr[xx] += o[2 * xx];
              }
          }
    });
  }

  /// Trilinear x2 upsampling with half-voxel centers and edge clamping:
  /// output index o samples the input at o/2 - 0.25.
  int trilinear_up2(int src) {
    const auto& x = t.val(src);
    const int B = x.b(), C = x.c(), d = x.d(), h = x.h(), w = x.w();
    TensorT<T> out(B, C, 2 * d, 2 * h, 2 * w);
    const auto idx = [](int o, int e, int& i0, int& i1, T& w1) {
      const double src_pos = 0.5 * o - 0.25;
      const double fl = std::floor(src_pos);
      i0 = std::max(0, std::min(e - 1, int(fl)));
      i1 = std::max(0, std::min(e - 1, int(fl) + 1));
      w1 = T(src_pos - fl);
    };
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const T* s = x.slice(b, c);
        T* o = out.slice(b, c);
        for (int z = 0; z < 2 * d; ++z) {
          int z0, z1;
          T wz;
          idx(z, d, z0, z1, wz);
          for (int y = 0; y < 2 * h; ++y) {
            int y0, y1;
            T wy;
            idx(y, h, y0, y1, wy);
            for (int xx = 0; xx < 2 * w; ++xx) {
              int x0, x1;
              T wx;
              idx(xx, w, x0, x1, wx);
              const auto S = [&](int zz, int yy, int xv) {
                return s[(std::int64_t(zz) * h + yy) * w + xv];
              };
              const T v =
                  (T(1) - wz) * ((T(1) - wy) * ((T(1) - wx) * S(z0, y0, x0) + wx * S(z0, y0, x1)) +
                                 wy * ((T(1) - wx) * S(z0, y1, x0) + wx * S(z0, y1, x1))) +
                  wz * ((T(1) - wy) * ((T(1) - wx) * S(z1, y0, x0) + wx * S(z1, y0, x1)) +
                        wy * ((T(1) - wx) * S(z1, y1, x0) + wx * S(z1, y1, x1)));
              o[(std::int64_t(z) * 2 * h + y) * 2 * w + xx] = v;
            }
          }
        }
      }
    return t.emit(std::move(out), t.wants(src), [src, B, C, d, h, w, idx](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const auto& dy = tp.node(self).grad;
      auto& g = tp.grad(src);
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          T* gs = g.slice(b, c);
          const T* dyp = dy.slice(b, c);
          for (int z = 0; z < 2 * d; ++z) {
            int z0, z1;
            T wz;
            idx(z, d, z0, z1, wz);
            for (int y = 0; y < 2 * h; ++y) {
              int y0, y1;
              T wy;
              idx(y, h, y0, y1, wy);
              for (int xx = 0; xx < 2 * w; ++xx) {
                int x0, x1;
                T wx;
                idx(xx, w, x0, x1, wx);
                const T dv = dyp[(std::int64_t(z) * 2 * h + y) * 2 * w + xx];
                const auto A = [&](int zz, int yy, int xv, T wgt) {
                  gs[(std::int64_t(zz) * h + yy) * w + xv] += wgt * dv;
                };
                A(z0, y0, x0, (T(1) - wz) * (T(1) - wy) * (T(1) - wx));
                A(z0, y0, x1, (T(1) - wz) * (T(1) - wy) * wx);
                A(z0, y1, x0, (T(1) - wz) * wy * (T(1) - wx));
                A(z0, y1, x1, (T(1) - wz) * wy * wx);
                A(z1, y0, x0, wz * (T(1) - wy) * (T(1) - wx));
                A(z1, y0, x1, wz * (T(1) - wy) * wx);
                A(z1, y1, x0, wz * wy * (T(1) - wx));
                A(z1, y1, x1, wz * wy * wx);
              }
            }
          }
        }
    });
  }

  /// 2x2x2 average pooling with floor semantics: odd trailing slices are
  /// dropped, so any extent >= 2 is accepted.
  int avgpool2(int src) {
    const auto& x = t.val(src);
    const int B = x.b(), C = x.c(), d = x.d(), h = x.h(), w = x.w();
    if (d < 2 || h < 2 || w < 2) throw ShapeError("avgpool2: extents must be >= 2");
    TensorT<T> out(B, C, d / 2, h / 2, w / 2);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const T* s = x.slice(b, c);
        T* o = out.slice(b, c);
        for (int z = 0; z < d / 2; ++z)
          for (int y = 0; y < h / 2; ++y)
            for (int xx = 0; xx < w / 2; ++xx) {
              T acc = 0;
              for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                  for (int k = 0; k < 2; ++k)
                    acc += s[(std::int64_t(2 * z + i) * h + 2 * y + j) * w + 2 * xx + k];
              o[(std::int64_t(z) * (h / 2) + y) * (w / 2) + xx] = acc * T(0.125);
            }
      }
    return t.emit(std::move(out), t.wants(src), [src, B, C, d, h, w](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const auto& dy = tp.node(self).grad;
      auto& g = tp.grad(src);
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          T* gs = g.slice(b, c);
          const T* dyp = dy.slice(b, c);
          for (int z = 0; z < d / 2; ++z)
            for (int y = 0; y < h / 2; ++y)
              for (int xx = 0; xx < w / 2; ++xx) {
                const T dv = dyp[(std::int64_t(z) * (h / 2) + y) * (w / 2) + xx] * T(0.125);
                for (int i = 0; i < 2; ++i)
                  for (int j = 0; j < 2; ++j)
                    for (int k = 0; k < 2; ++k)
                      gs[(std::int64_t(2 * z + i) * h + 2 * y + j) * w + 2 * xx + k] += dv;
              }
        }
    });
  }

  /// Global average pooling to [B, C, 1, 1, 1].
  int global_avg_pool(int src) {
    const auto& x = t.val(src);
    const int B = x.b(), C = x.c();
    const std::int64_t n = x.spatial();
    TensorT<T> out(B, C, 1, 1, 1);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        double s = 0.0;
        const T* p = x.slice(b, c);
        for (std::int64_t i = 0; i < n; ++i) s += double(p[i]);
        out.at(b, c, 0, 0, 0) = T(s / double(n));
      }
    return t.emit(std::move(out), t.wants(src), [src, B, C, n](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const auto& dy = tp.node(self).grad;
      auto& g = tp.grad(src);
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          const T dv = dy.at(b, c, 0, 0, 0) / T(n);
          T* gs = g.slice(b, c);
          for (std::int64_t i = 0; i < n; ++i) gs[i] += dv;
        }
    });
  }

  /// Single-level 3D Haar transform per channel: [B, C, d, h, w] ->
  /// [B, 8C, d/2, h/2, w/2] with band-major channel order (band*C + c).
  /// The transform is orthonormal, so the backward pass is the inverse
  /// transform applied to the incoming gradient bands.
  int dwt_bands(int src) {
    const auto& x = t.val(src);
    const int B = x.b(), C = x.c(), d = x.d(), h = x.h(), w = x.w();
    if (d % 2 || h % 2 || w % 2) throw OddExtent("dwt_bands: extents must be even");
    TensorT<T> out(B, 8 * C, d / 2, h / 2, w / 2);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        std::array<T*, 8> ptrs{};
        for (int band = 0; band < 8; ++band) ptrs[band] = out.slice(b, band * C + c);
        dwt3_forward_grid(x.slice(b, c), d, h, w, ptrs);
      }
    return t.emit(std::move(out), t.wants(src), [src, B, C, d, h, w](Tape<T>& tp, int self) {
      if (!tp.wants(src)) return;
      const auto& dy = tp.node(self).grad;
      auto& g = tp.grad(src);
      std::vector<T> tmp(std::size_t(d) * h * w);
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          std::array<const T*, 8> ptrs{};
          for (int band = 0; band < 8; ++band) ptrs[band] = dy.slice(b, band * C + c);
          dwt3_inverse_grid(ptrs, d, h, w, tmp.data());
          T* gs = g.slice(b, c);
          for (std::size_t i = 0; i < tmp.size(); ++i) gs[i] += tmp[i];
        }
    });
  }
};

}  // namespace disgan
