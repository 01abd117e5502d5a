#include "disgan/generator.hpp"

namespace disgan {

void build_generator(const GeneratorConfig& cfg, std::uint64_t seed, ParamStore& store) {
  cfg.validate();
  CounterRng rng = CounterRng::keyed(seed, rng_stream::kInit, /*net=*/1);
  const int F = cfg.base_filters, G = cfg.growth_channels;

  const auto conv3 = [&](const std::string& name, int co, int ci) {
    store.add(name + ".w", kaiming_conv3(rng, co, ci));
    store.add(name + ".b", zero_bias(co));
  };

  conv3("head", F, 1);
  for (int i = 0; i < cfg.num_vrrdb; ++i)
    for (int j = 0; j < 3; ++j) {
      const std::string p = "vrrdb" + std::to_string(i) + ".du" + std::to_string(j);
      for (int k = 1; k <= 4; ++k) conv3(p + ".c" + std::to_string(k), G, F + (k - 1) * G);
      conv3(p + ".c5", F, F + 4 * G);
    }
  conv3("trunk", F, F);
  conv3("up", 8 * F, F);
  conv3("hr", F, F);
  conv3("last", 1, F);
}

std::int64_t generator_param_count(const GeneratorConfig& cfg) {
  const std::int64_t F = cfg.base_filters, G = cfg.growth_channels;
  std::int64_t du = 0;
  for (int k = 0; k < 4; ++k) du += (F + k * G) * G * 27 + G;
  du += (F + 4 * G) * F * 27 + F;
  std::int64_t total = F * 27 + F;                       // head (1 input channel)
  total += cfg.num_vrrdb * 3 * du;                       // dense units
  total += F * F * 27 + F;                               // trunk
  total += F * (8 * F) * 27 + 8 * F;                     // upsample conv
  total += F * F * 27 + F;                               // hr conv
  total += F * 1 * 27 + 1;                               // last conv
  return total;
}

int generator_conv_count(const GeneratorConfig& cfg) {
  return 1 + cfg.num_vrrdb * 3 * 5 + 4;
}

}  // namespace disgan
