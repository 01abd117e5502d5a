#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "disgan/params.hpp"
#include "disgan/tape.hpp"

namespace disgan {

/// Volumetric RRDB super-resolution generator: head conv, num_vrrdb
/// residual-in-residual blocks (3 dense units of 5 convs each), trunk conv
/// with a global skip before upsampling, x2 sub-pixel upsampling via 3D pixel
/// shuffle, then two reconstruction convs. No normalization layers anywhere.
struct GeneratorConfig {
  int num_vrrdb = 3;
  int base_filters = 64;
  int growth_channels = 32;
  float residual_scale = 0.2f;
  static constexpr int upscale = 2;

  static GeneratorConfig desk() {
    GeneratorConfig c;
    c.base_filters = 16;
    c.growth_channels = 8;
    return c;
  }

  void validate() const {
    if (num_vrrdb < 1) throw ConfigError("generator: num_vrrdb must be >= 1");
    if (base_filters < 1) throw ConfigError("generator: base_filters must be >= 1");
    if (growth_channels < 1) throw ConfigError("generator: growth_channels must be >= 1");
    if (!(residual_scale > 0.0f) || residual_scale > 1.0f)
      throw ConfigError("generator: residual_scale must be in (0,1]");
  }

  nlohmann::ordered_json to_json() const {
    return {{"num_vrrdb", num_vrrdb},
            {"base_filters", base_filters},
            {"growth_channels", growth_channels},
            {"residual_scale", residual_scale}};
  }
  static GeneratorConfig from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    c.num_vrrdb = j.value("num_vrrdb", c.num_vrrdb);
    c.base_filters = j.value("base_filters", c.base_filters);
    c.growth_channels = j.value("growth_channels", c.growth_channels);
    c.residual_scale = j.value("residual_scale", c.residual_scale);
    c.validate();
    return c;
  }
};

/// Fills `store` with Kaiming-initialized weights and zero biases in a fixed
/// order; bit-identical for a given (config, seed).
void build_generator(const GeneratorConfig& cfg, std::uint64_t seed, ParamStore& store);

/// Closed-form parameter count for the architecture above.
std::int64_t generator_param_count(const GeneratorConfig& cfg);

/// Number of convolution layers (head + 5 per dense unit + trunk/up/hr/last).
int generator_conv_count(const GeneratorConfig& cfg);

/// Forward pass on a tape. Input: [B, 1, d, h, w] with d,h,w >= 8;
/// output: [B, 1, 2d, 2h, 2w].
template <class T>
int generator_forward(Ops<T>& op, BoundParams<T>& P, const GeneratorConfig& cfg, int x) {
  const auto& xv = op.t.val(x);
  if (xv.c() != 1) throw ShapeError("generator: input must have 1 channel");
  if (xv.d() < 8 || xv.h() < 8 || xv.w() < 8)
    throw ShapeError("generator: spatial extents must be >= 8, got " + xv.shape_str());
  const T slope = T(0.2);
  const T rs = T(cfg.residual_scale);

  const auto dense_unit = [&](int in, const std::string& p) {
    std::vector<int> feats{in};
    for (int k = 1; k <= 4; ++k) {
      const int c = op.conv3(feats, P(p + ".c" + std::to_string(k) + ".w"),
                             P(p + ".c" + std::to_string(k) + ".b"));
      feats.push_back(op.lrelu(c, slope));
    }
    const int c5 = op.conv3(feats, P(p + ".c5.w"), P(p + ".c5.b"));
    return op.add_scaled(in, c5, rs);
  };

  int fea = op.conv3({x}, P("head.w"), P("head.b"));
  int body = fea;
  for (int i = 0; i < cfg.num_vrrdb; ++i) {
    const std::string bp = "vrrdb" + std::to_string(i);
    int u = body;
    for (int j = 0; j < 3; ++j) u = dense_unit(u, bp + ".du" + std::to_string(j));
    body = op.add_scaled(body, u, rs);
  }
  body = op.conv3({body}, P("trunk.w"), P("trunk.b"));
  body = op.add(fea, body);  // global skip, before upsampling

  int up = op.conv3({body}, P("up.w"), P("up.b"));
  up = op.lrelu(op.pixel_shuffle3(up), slope);
  const int hr = op.lrelu(op.conv3({up}, P("hr.w"), P("hr.b")), slope);
  return op.conv3({hr}, P("last.w"), P("last.b"));
}

}  // namespace disgan
