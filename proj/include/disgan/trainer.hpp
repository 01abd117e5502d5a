#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "disgan/datapipe.hpp"
#include "disgan/discriminator.hpp"
#include "disgan/generator.hpp"
#include "disgan/objectives.hpp"
#include "disgan/perceptual.hpp"
#include "disgan/volume.hpp"

namespace disgan {

struct TrainerConfig {
  double lr = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  std::int64_t iterations = 1500;
  int batch_size = 0;  // mandatory in config files
  LossWeights weights;
  double sigma_start = 1.0;
  double sigma_end = 0.0;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 500;
  int hr_patch = 32;
  int patch_stride = 16;
  double data_noise_sigma = 0.0;
  GeneratorConfig gen = GeneratorConfig::desk();
  DiscriminatorConfig disc = DiscriminatorConfig::desk();
  FeatureExtractorConfig feat;

  /// The instance-noise anneal spans the configured training length.
  NoiseSchedule schedule() const { return {sigma_start, sigma_end, iterations}; }

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainerConfig from_json(const nlohmann::json& j);

  /// Everything that must match for a checkpoint to resume this config.
  nlohmann::ordered_json compute_signature() const;
};

struct StepLog {
  std::int64_t iter = 0;
  double sigma = 0.0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double g_perc = 0.0;
  double g_pixel = 0.0;
  double g_ragan = 0.0;
  std::optional<double> f_loss;  // joint extractor mode only

  nlohmann::ordered_json to_json() const;
};

/// Owns the three networks, their Adam moments and the iteration counter.
/// One train_step runs the ordered sub-steps: generator forward (detached),
/// discriminator update, generator update on the composite loss with fresh
/// scores, then the extractor update when the mode is joint.
class Trainer {
 public:
  explicit Trainer(const TrainerConfig& cfg);

  StepLog train_step(const std::vector<PatchPair>& batch);

  void save_checkpoint_file(const std::string& path) const;
  void load_checkpoint_file(const std::string& path);

  std::int64_t iteration() const { return iter_; }
  const TrainerConfig& config() const { return cfg_; }
  ParamStore& gen_store() { return g_; }
  ParamStore& disc_store() { return d_; }
  ParamStore& feat_store() { return f_; }

 private:
  TrainerConfig cfg_;
  ParamStore g_, d_, f_;
  std::int64_t iter_ = 0;
};

struct TrainResult {
  std::string final_checkpoint;
  std::string log_path;
  StepLog last;
};

/// Full run: standardizes the volumes, streams seeded batches, logs one JSON
/// object per step to <out_dir>/train_log.jsonl, checkpoints periodically and
/// at the end. `resume_path` continues a run from a saved state; the log is
/// then appended from the resumed iteration.
TrainResult train(const TrainerConfig& cfg, const std::vector<Volume>& volumes,
                  const std::string& out_dir, const std::string& resume_path = "");

}  // namespace disgan
