#include "disgan/perceptual.hpp"

namespace disgan {

void build_feature_extractor(const FeatureExtractorConfig& cfg, std::uint64_t seed,
                             ParamStore& store) {
  cfg.validate();
  CounterRng rng = CounterRng::keyed(seed, rng_stream::kInit, /*net=*/3);
  const auto conv3 = [&](const std::string& name, int co, int ci) {
    store.add(name + ".w", kaiming_conv3(rng, co, ci));
    store.add(name + ".b", zero_bias(co));
  };
  conv3("stem", cfg.widths[0], 1);
  int ci = cfg.widths[0];
  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    const int co = cfg.widths[i];
    const std::string p = "stage" + std::to_string(i);
    conv3(p + ".c1", co, ci);
    conv3(p + ".c2", co, co);
    if (i > 0) {
      store.add(p + ".sc.w", kaiming_conv1(rng, co, ci));
      store.add(p + ".sc.b", zero_bias(co));
    }
    ci = co;
  }
}

std::int64_t feature_extractor_param_count(const FeatureExtractorConfig& cfg) {
  std::int64_t total = std::int64_t(cfg.widths[0]) * 27 + cfg.widths[0];  // stem
  int ci = cfg.widths[0];
  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    const int co = cfg.widths[i];
    total += std::int64_t(co) * ci * 27 + co;
    total += std::int64_t(co) * co * 27 + co;
    if (i > 0) total += std::int64_t(co) * ci + co;
    ci = co;
  }
  return total;
}

double perceptual_distance(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size())
    throw ShapeError("perceptual_distance: length mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  if (a.empty()) throw ShapeError("perceptual_distance: empty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    s += d * d;
  }
  return s / double(a.size());
}

}  // namespace disgan
