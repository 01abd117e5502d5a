#include "disgan/discriminator.hpp"

namespace disgan {

void build_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed, ParamStore& store) {
  cfg.validate();
  CounterRng rng = CounterRng::keyed(seed, rng_stream::kInit, /*net=*/2);
  const int L = cfg.levels();

  int ci = 1;
  for (int i = 0; i < L; ++i) {
    const int co = cfg.channels[std::size_t(i)];
    const std::string p = "enc" + std::to_string(i);
    store.add(p + ".low.w", kaiming_conv1(rng, co / 2, ci));
    store.add(p + ".low.b", zero_bias(co / 2));
    store.add(p + ".high.w", kaiming_conv1(rng, co / 2, 7 * ci));
    store.add(p + ".high.b", zero_bias(co / 2));
    ci = co;
  }
  for (int i = L - 1; i >= 1; --i) {
    const int cin = cfg.channels[std::size_t(i)] + cfg.channels[std::size_t(i - 1)];
    const int co = cfg.channels[std::size_t(i - 1)];
    store.add("dec" + std::to_string(i) + ".w", kaiming_conv3(rng, co, cin));
    store.add("dec" + std::to_string(i) + ".b", zero_bias(co));
  }
  store.add("dec0.w", kaiming_conv3(rng, cfg.channels[0], cfg.channels[0]));
  store.add("dec0.b", zero_bias(cfg.channels[0]));
  store.add("score.w", kaiming_conv1(rng, 1, cfg.channels[0]));
  store.add("score.b", zero_bias(1));
}

std::int64_t discriminator_param_count(const DiscriminatorConfig& cfg) {
  const int L = cfg.levels();
  std::int64_t total = 0;
  int ci = 1;
  for (int i = 0; i < L; ++i) {
    const int co = cfg.channels[std::size_t(i)];
    total += std::int64_t(co / 2) * ci + co / 2;           // low 1x1
    total += std::int64_t(co / 2) * 7 * ci + co / 2;       // high 1x1
    ci = co;
  }
  for (int i = L - 1; i >= 1; --i) {
    const int cin = cfg.channels[std::size_t(i)] + cfg.channels[std::size_t(i - 1)];
    total += std::int64_t(cfg.channels[std::size_t(i - 1)]) * cin * 27 +
             cfg.channels[std::size_t(i - 1)];
  }
  total += std::int64_t(cfg.channels[0]) * cfg.channels[0] * 27 + cfg.channels[0];  // dec0
  total += cfg.channels[0] + 1;                                                     // score 1x1
  return total;
}

}  // namespace disgan
