#pragma once

#include <cstdint>
#include <vector>

#include "disgan/rng.hpp"
#include "disgan/tape.hpp"
#include "disgan/tensor.hpp"

namespace disgan {

struct LossWeights {
  double alpha = 0.01;   // pixel L1 weight
  double beta = 0.005;   // adversarial weight

  void validate() const {
    if (alpha < 0.0 || beta < 0.0) throw ConfigError("loss weights must be >= 0");
  }
};

/// Linear anneal from sigma_start at iteration 0 towards sigma_end, clamped
/// at sigma_end from total_iters onward.
struct NoiseSchedule {
  double sigma_start = 1.0;
  double sigma_end = 0.0;
  std::int64_t total_iters = 60000;

  void validate() const {
    if (!(sigma_start >= sigma_end) || sigma_end < 0.0)
      throw ConfigError("noise schedule: need sigma_start >= sigma_end >= 0");
    if (total_iters < 1) throw ConfigError("noise schedule: total_iters must be >= 1");
  }
};

double instance_noise_sigma(const NoiseSchedule& s, std::int64_t iter);

/// x + N(0, sigma^2) i.i.d. per element from the given stream; sigma = 0
/// returns x unchanged (bit-identical).
TensorF apply_instance_noise(const TensorF& x, double sigma, CounterRng& rng);

// --- scalar loss functions (double precision, fixed accumulation order) -----

/// Mean absolute difference over all voxels.
double l1_pixel(const TensorF& sr, const TensorF& hr);

/// Relativistic-average discriminator loss over score samples:
///   L_D = -mean log sigmoid(r - mean(f)) - mean log(1 - sigmoid(f - mean(r)))
/// evaluated via softplus identities, so extreme scores cannot overflow.
double ragan_d_loss(const std::vector<double>& real, const std::vector<double>& fake);

/// Generator counterpart; exactly the role swap ragan_d_loss(fake, real).
double ragan_g_loss(const std::vector<double>& real, const std::vector<double>& fake);

/// Eq. weights composite: perc + alpha * pixel + beta * g_ragan.
double total_g_loss(double perc, double pixel, double g_ragan, const LossWeights& w);

// --- tape builders -----------------------------------------------------------

template <class T>
int l1_pixel_node(Ops<T>& op, int sr, int hr) {
  return op.mean_all(op.abs(op.sub(sr, hr)));
}

template <class T>
int ragan_d_node(Ops<T>& op, int real_scores, int fake_scores) {
  const int mf = op.mean_all(fake_scores);
  const int mr = op.mean_all(real_scores);
  const int lr_term = op.mean_all(op.softplus(op.scale(op.sub_bcast(real_scores, mf), T(-1))));
  const int lf_term = op.mean_all(op.softplus(op.sub_bcast(fake_scores, mr)));
  return op.weighted_sum({lr_term, lf_term}, {T(1), T(1)});
}

template <class T>
int ragan_g_node(Ops<T>& op, int real_scores, int fake_scores) {
  return ragan_d_node(op, fake_scores, real_scores);
}

}  // namespace disgan
