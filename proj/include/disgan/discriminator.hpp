#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "disgan/params.hpp"
#include "disgan/tape.hpp"

namespace disgan {

/// Wavelet-informed U-shaped critic. Each encoder level is a DWT+conv unit:
/// a single-level 3D Haar transform halves the resolution, the LLL bands go
/// through one 1x1x1 conv (Cin -> Cout/2), the 7 concatenated high bands
/// through another (7*Cin -> Cout/2), the halves are concatenated and pass a
/// leaky rectifier. The decoder mirrors with trilinear x2 upsampling, skip
/// concatenation and 3x3x3 convs, and a final 1x1x1 conv produces one raw
/// score per input voxel (no output nonlinearity).
struct DiscriminatorConfig {
  std::vector<int> channels{32, 64, 128};
  float slope = 0.2f;

  int levels() const { return int(channels.size()); }

  static DiscriminatorConfig desk() {
    DiscriminatorConfig c;
    c.channels = {8, 16, 32};
    return c;
  }

  void validate() const {
    if (channels.empty()) throw ConfigError("discriminator: need >= 1 level");
    for (int c : channels)
      if (c < 2 || c % 2 != 0)
        throw ConfigError("discriminator: level channels must be even and >= 2");
  }

  nlohmann::ordered_json to_json() const {
    return {{"channels", channels}, {"slope", slope}};
  }
  static DiscriminatorConfig from_json(const nlohmann::json& j) {
    DiscriminatorConfig c;
    if (j.contains("channels")) c.channels = j["channels"].get<std::vector<int>>();
    c.slope = j.value("slope", c.slope);
    c.validate();
    return c;
  }
};

void build_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed, ParamStore& store);

std::int64_t discriminator_param_count(const DiscriminatorConfig& cfg);

/// One DWT+conv unit: [B, Cin, D, H, W] -> [B, Cout, D/2, H/2, W/2].
template <class T>
int dwt_conv_unit_forward(Ops<T>& op, BoundParams<T>& P, const std::string& prefix,
                          int x, T slope) {
  const int ci = op.t.val(x).c();
  const int bands = op.dwt_bands(x);  // [B, 8*Cin, D/2, H/2, W/2]
  const int lll = op.slice_channels(bands, 0, ci);
  const int high = op.slice_channels(bands, ci, 8 * ci);
  const int low_out = op.conv1(lll, P(prefix + ".low.w"), P(prefix + ".low.b"));
  const int high_out = op.conv1(high, P(prefix + ".high.w"), P(prefix + ".high.b"));
  return op.lrelu(op.concat_channels({low_out, high_out}), slope);
}

/// Full critic forward. Input: [B, 1, D, H, W] with extents divisible by
/// 2^levels; output: [B, 1, D, H, W] of raw scores.
template <class T>
int discriminator_forward(Ops<T>& op, BoundParams<T>& P, const DiscriminatorConfig& cfg,
                          int x) {
  const auto& xv = op.t.val(x);
  if (xv.c() != 1) throw ShapeError("discriminator: input must have 1 channel");
  const int L = cfg.levels();
  for (int e : {xv.d(), xv.h(), xv.w()})
    if (e % (1 << L) != 0)
      throw ShapeError("discriminator: extents must be divisible by 2^levels, got " +
                       xv.shape_str());
  const T slope = T(cfg.slope);

  std::vector<int> enc;  // encoder outputs, level i at scale /2^(i+1)
  int cur = x;
  for (int i = 0; i < L; ++i) {
    cur = dwt_conv_unit_forward(op, P, "enc" + std::to_string(i), cur, slope);
    enc.push_back(cur);
  }
  for (int i = L - 1; i >= 1; --i) {
    cur = op.trilinear_up2(cur);
    cur = op.lrelu(op.conv3({cur, enc[std::size_t(i - 1)]},
                            P("dec" + std::to_string(i) + ".w"),
                            P("dec" + std::to_string(i) + ".b")),
                   slope);
  }
  cur = op.trilinear_up2(cur);
  cur = op.lrelu(op.conv3({cur}, P("dec0.w"), P("dec0.b")), slope);
  return op.conv1(cur, P("score.w"), P("score.b"));
}

}  // namespace disgan
