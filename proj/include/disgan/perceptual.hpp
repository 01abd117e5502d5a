#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "disgan/params.hpp"
#include "disgan/tape.hpp"

namespace disgan {

/// Convolutional feature extractor in the ResNet10 mold: a 3x3x3 stem, one
/// basic residual block per stage, average-pool downsampling between stages,
/// global average pooling to a fixed-length feature vector. No linear layers
/// and no normalization layers; without batch norm the residual branches are
/// scaled by 0.2, which keeps activations bounded through the stages and the
/// feature distance at a scale where the published loss weights behave.
struct FeatureExtractorConfig {
  std::vector<int> widths{16, 32, 64, 128};
  enum class Mode { kFrozen, kJoint };
  Mode mode = Mode::kFrozen;

  int feature_length() const { return widths.back(); }

  void validate() const {
    if (widths.empty()) throw ConfigError("extractor: need >= 1 stage");
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (widths[i] < 1) throw ConfigError("extractor: widths must be >= 1");
      if (i > 0 && widths[i] <= widths[i - 1])
        throw ConfigError("extractor: widths must be strictly increasing");
    }
  }

  nlohmann::ordered_json to_json() const {
    return {{"widths", widths}, {"mode", mode == Mode::kFrozen ? "frozen" : "joint"}};
  }
  static FeatureExtractorConfig from_json(const nlohmann::json& j) {
    FeatureExtractorConfig c;
    if (j.contains("widths")) c.widths = j["widths"].get<std::vector<int>>();
    const std::string m = j.value("mode", "frozen");
    if (m == "frozen")
      c.mode = Mode::kFrozen;
    else if (m == "joint")
      c.mode = Mode::kJoint;
    else
      throw ConfigError("extractor: mode must be \"frozen\" or \"joint\"");
    c.validate();
    return c;
  }
};

void build_feature_extractor(const FeatureExtractorConfig& cfg, std::uint64_t seed,
                             ParamStore& store);

std::int64_t feature_extractor_param_count(const FeatureExtractorConfig& cfg);

/// Input: [B, 1, d, h, w] with extents >= 16; output: [B, feature_length, 1, 1, 1].
template <class T>
int feature_forward(Ops<T>& op, BoundParams<T>& P, const FeatureExtractorConfig& cfg, int x) {
  const auto& xv = op.t.val(x);
  if (xv.c() != 1) throw ShapeError("extractor: input must have 1 channel");
  if (xv.d() < 16 || xv.h() < 16 || xv.w() < 16)
    throw ShapeError("extractor: spatial extents must be >= 16, got " + xv.shape_str());
  const T slope = T(0.2);
  const T branch_scale = T(0.2);

  int cur = op.lrelu(op.conv3({x}, P("stem.w"), P("stem.b")), slope);
  cur = op.avgpool2(cur);
  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    const std::string p = "stage" + std::to_string(i);
    if (i > 0) cur = op.avgpool2(cur);
    int y = op.lrelu(op.conv3({cur}, P(p + ".c1.w"), P(p + ".c1.b")), slope);
    y = op.conv3({y}, P(p + ".c2.w"), P(p + ".c2.b"));
    const int shortcut = i > 0 ? op.conv1(cur, P(p + ".sc.w"), P(p + ".sc.b")) : cur;
    cur = op.lrelu(op.add_scaled(shortcut, y, branch_scale), slope);
  }
  return op.global_avg_pool(cur);
}

/// Mean squared Euclidean distance between two equal-length feature vectors,
/// d = (1/n) * sum((a - b)^2), accumulated in double.
double perceptual_distance(const std::vector<float>& a, const std::vector<float>& b);

/// Tape node: mean over batch and feature axes of (f_a - f_b)^2.
template <class T>
int perceptual_distance_node(Ops<T>& op, int fa, int fb) {
  return op.mean_all(op.square(op.sub(fa, fb)));
}

}  // namespace disgan
