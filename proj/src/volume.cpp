#include "disgan/volume.hpp"

#include <algorithm>
#include <cmath>

#include "disgan/rng.hpp"

namespace disgan {

VolumeStats volume_stats(const Volume& v) {
  if (v.numel() == 0) throw InvalidSize("volume_stats: empty volume");
  double sum = 0.0, mn = v.voxels[0], mx = v.voxels[0];
  for (float x : v.voxels) {
    sum += x;
    mn = std::min<double>(mn, x);
    mx = std::max<double>(mx, x);
  }
  const double mean = sum / double(v.numel());
  double ss = 0.0;
  for (float x : v.voxels) {
    const double d = x - mean;
    ss += d * d;
  }
  VolumeStats s;
  s.mean = mean;
  s.std = std::sqrt(ss / double(v.numel()));
  s.min = mn;
  s.max = mx;
  return s;
}

Volume standardize(const Volume& v) {
  const VolumeStats s = volume_stats(v);
  if (s.std <= 1e-8)
    throw DegenerateVolume("standardize: volume is constant (std <= 1e-8)");
  Volume out = v;
  const double inv = 1.0 / s.std;
  for (auto& x : out.voxels) x = float((double(x) - s.mean) * inv);
  return out;
}

void require_finite(const Volume& v, const std::string& what) {
  for (float x : v.voxels)
    if (!std::isfinite(x))
      throw DegenerateVolume(what + ": non-finite voxel value");
}

namespace {

struct Shell {
  double cz, cy, cx;      // center, normalized coords
  double az, ay, ax;      // semi-axes, normalized
  double thick;           // shell thickness, normalized
  double amp;
};

struct Tube {
  double pz, py, px;      // a point on the axis, voxel coords
  double dz, dy, dx;      // unit direction
  double radius;          // voxels
  double amp;
};

}  // namespace

Volume phantom(std::uint64_t seed, const std::array<int, 3>& size) {
  for (int e : size)
    if (e < 32 || e % 2 != 0)
      throw InvalidSize("phantom: extents must be even and >= 32");

  const int D = size[0], H = size[1], W = size[2];
  CounterRng rng = CounterRng::keyed(seed, rng_stream::kPhantom);

  // Smooth low-frequency background in roughly [0.08, 0.38].
  struct Wave {
    double fz, fy, fx, phase, amp;
  };
  std::array<Wave, 3> waves;
  for (auto& wv : waves) {
    wv.fz = rng.uniform(0.5, 1.5);
    wv.fy = rng.uniform(0.5, 1.5);
    wv.fx = rng.uniform(0.5, 1.5);
    wv.phase = rng.uniform(0.0, 6.283185307179586);
    wv.amp = rng.uniform(0.03, 0.05);
  }

  std::array<Shell, 4> shells;
  for (auto& sh : shells) {
    sh.cz = rng.uniform(0.3, 0.7);
    sh.cy = rng.uniform(0.3, 0.7);
    sh.cx = rng.uniform(0.3, 0.7);
    sh.az = rng.uniform(0.12, 0.32);
    sh.ay = rng.uniform(0.12, 0.32);
    sh.ax = rng.uniform(0.12, 0.32);
    sh.thick = rng.uniform(0.03, 0.06);
    sh.amp = rng.uniform(0.25, 0.4);
  }

  std::array<Tube, 3> tubes;
  for (auto& tb : tubes) {
    tb.pz = rng.uniform(0.2, 0.8) * D;
    tb.py = rng.uniform(0.2, 0.8) * H;
    tb.px = rng.uniform(0.2, 0.8) * W;
    double dz = rng.uniform(-1.0, 1.0), dy = rng.uniform(-1.0, 1.0), dx = rng.uniform(-1.0, 1.0);
    const double n = std::sqrt(dz * dz + dy * dy + dx * dx) + 1e-9;
    tb.dz = dz / n;
    tb.dy = dy / n;
    tb.dx = dx / n;
    tb.radius = rng.uniform(1.0, 2.0);  // full width 2-4 voxels
    tb.amp = rng.uniform(0.3, 0.45);
  }

  Volume v(D, H, W);
  const double tau = 6.283185307179586;
  for (int z = 0; z < D; ++z) {
    const double nz = (z + 0.5) / D;
    for (int y = 0; y < H; ++y) {
      const double ny = (y + 0.5) / H;
      for (int x = 0; x < W; ++x) {
        const double nx = (x + 0.5) / W;
        double val = 0.2;
        for (const auto& wv : waves)
          val += wv.amp * std::cos(tau * (wv.fz * nz + wv.fy * ny + wv.fx * nx) + wv.phase);
        for (const auto& sh : shells) {
          const double rz = (nz - sh.cz) / sh.az;
          const double ry = (ny - sh.cy) / sh.ay;
          const double rx = (nx - sh.cx) / sh.ax;
          const double rho = std::sqrt(rz * rz + ry * ry + rx * rx);
          const double t = (rho - 1.0) / sh.thick;
          val += sh.amp * std::exp(-t * t);
        }
        for (const auto& tb : tubes) {
          const double vz = z - tb.pz, vy = y - tb.py, vx = x - tb.px;
          const double dot = vz * tb.dz + vy * tb.dy + vx * tb.dx;
          const double qz = vz - dot * tb.dz, qy = vy - dot * tb.dy, qx = vx - dot * tb.dx;
          const double dist2 = (qz * qz + qy * qy + qx * qx) / (tb.radius * tb.radius);
          val += tb.amp * std::exp(-dist2 * dist2);
        }
        v.at(z, y, x) = float(std::clamp(val, 0.0, 1.0));
      }
    }
  }
  return v;
}

}  // namespace disgan
