#include "disgan/objectives.hpp"

#include <cmath>

namespace disgan {

namespace {

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double mean_of(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw InvalidScores(std::string(what) + ": empty score set");
  double s = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidScores(std::string(what) + ": non-finite score");
    s += x;
  }
  return s / double(v.size());
}

}  // namespace

double instance_noise_sigma(const NoiseSchedule& s, std::int64_t iter) {
  s.validate();
  if (iter < 0) throw ConfigError("instance_noise_sigma: iter must be >= 0");
  const double t = double(iter) / double(s.total_iters);
  return std::max(s.sigma_end, s.sigma_start + (s.sigma_end - s.sigma_start) * t);
}

TensorF apply_instance_noise(const TensorF& x, double sigma, CounterRng& rng) {
  if (sigma < 0.0) throw InvalidSigma("apply_instance_noise: sigma must be >= 0");
  if (sigma == 0.0) return x;
  TensorF out = x;
  for (auto& v : out.v) v += float(rng.next_gaussian() * sigma);
  return out;
}

double l1_pixel(const TensorF& sr, const TensorF& hr) {
  require_same_shape(sr, hr, "l1_pixel");
  double s = 0.0;
  for (std::int64_t i = 0; i < sr.numel(); ++i)
    s += std::abs(double(sr.v[i]) - double(hr.v[i]));
  return s / double(sr.numel());
}

double ragan_d_loss(const std::vector<double>& real, const std::vector<double>& fake) {
  const double mr = mean_of(real, "ragan_d_loss(real)");
  const double mf = mean_of(fake, "ragan_d_loss(fake)");
  double lr_term = 0.0;
  for (double r : real) lr_term += softplus(-(r - mf));
  double lf_term = 0.0;
  for (double f : fake) lf_term += softplus(f - mr);
  return lr_term / double(real.size()) + lf_term / double(fake.size());
}

double ragan_g_loss(const std::vector<double>& real, const std::vector<double>& fake) {
  return ragan_d_loss(fake, real);
}

double total_g_loss(double perc, double pixel, double g_ragan, const LossWeights& w) {
  w.validate();
  if (!std::isfinite(perc) || !std::isfinite(pixel) || !std::isfinite(g_ragan))
    throw InvalidLoss("total_g_loss: non-finite loss term");
  return perc + w.alpha * pixel + w.beta * g_ragan;
}

}  // namespace disgan
