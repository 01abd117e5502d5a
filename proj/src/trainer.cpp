#include "disgan/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace disgan {

void TrainerConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("trainer: lr must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < adam_beta2 && adam_beta2 < 1.0))
    throw ConfigError("trainer: need 0 <= beta1 < beta2 < 1");
  if (iterations < 1) throw ConfigError("trainer: iterations must be >= 1");
  if (batch_size < 1) throw ConfigError("trainer: batch_size must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("trainer: checkpoint_every must be >= 1");
  if (hr_patch < 16 || hr_patch % 2 != 0)
    throw ConfigError("trainer: hr_patch must be even and >= 16");
  if (patch_stride < 1) throw ConfigError("trainer: patch_stride must be >= 1");
  if (data_noise_sigma < 0.0) throw ConfigError("trainer: data_noise_sigma must be >= 0");
  weights.validate();
  schedule().validate();
  gen.validate();
  disc.validate();
  feat.validate();
}

nlohmann::ordered_json TrainerConfig::to_json() const {
  nlohmann::ordered_json j;
  j["lr"] = lr;
  j["adam_beta1"] = adam_beta1;
  j["adam_beta2"] = adam_beta2;
  j["iterations"] = iterations;
  j["batch_size"] = batch_size;
  j["alpha"] = weights.alpha;
  j["beta"] = weights.beta;
  j["sigma_start"] = sigma_start;
  j["sigma_end"] = sigma_end;
  j["seed"] = seed;
  j["checkpoint_every"] = checkpoint_every;
  j["hr_patch"] = hr_patch;
  j["patch_stride"] = patch_stride;
  j["data_noise_sigma"] = data_noise_sigma;
  j["generator"] = gen.to_json();
  j["discriminator"] = disc.to_json();
  j["extractor"] = feat.to_json();
  return j;
}

TrainerConfig TrainerConfig::from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {
      "lr", "adam_beta1", "adam_beta2", "iterations", "batch_size", "alpha", "beta",
      "sigma_start", "sigma_end", "seed", "checkpoint_every", "hr_patch", "patch_stride",
      "data_noise_sigma", "generator", "discriminator", "extractor", "manifest", "out_dir"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("trainer config: unknown key \"" + it.key() + "\"");

  TrainerConfig c;
  c.lr = j.value("lr", c.lr);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.iterations = j.value("iterations", c.iterations);
  if (!j.contains("batch_size")) throw ConfigError("trainer config: batch_size is mandatory");
  c.batch_size = j["batch_size"].get<int>();
  c.weights.alpha = j.value("alpha", c.weights.alpha);
  c.weights.beta = j.value("beta", c.weights.beta);
  c.sigma_start = j.value("sigma_start", c.sigma_start);
  c.sigma_end = j.value("sigma_end", c.sigma_end);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.hr_patch = j.value("hr_patch", c.hr_patch);
  c.patch_stride = j.value("patch_stride", c.patch_stride);
  c.data_noise_sigma = j.value("data_noise_sigma", c.data_noise_sigma);
  if (j.contains("generator")) c.gen = GeneratorConfig::from_json(j["generator"]);
  if (j.contains("discriminator")) c.disc = DiscriminatorConfig::from_json(j["discriminator"]);
  if (j.contains("extractor")) c.feat = FeatureExtractorConfig::from_json(j["extractor"]);
  c.validate();
  return c;
}

nlohmann::ordered_json TrainerConfig::compute_signature() const {
  auto j = to_json();
  j.erase("checkpoint_every");
  return j;
}

nlohmann::ordered_json StepLog::to_json() const {
  nlohmann::ordered_json j;
  j["iter"] = iter;
  j["sigma"] = sigma;
  j["d_loss"] = d_loss;
  j["g_loss"] = g_loss;
  j["g_perc"] = g_perc;
  j["g_pixel"] = g_pixel;
  j["g_ragan"] = g_ragan;
  if (f_loss) j["f_loss"] = *f_loss;
  return j;
}

namespace {

TensorF pack_batch(const std::vector<PatchPair>& batch, bool hr) {
  const Volume& v0 = hr ? batch[0].hr : batch[0].lr;
  TensorF t(int(batch.size()), 1, v0.d(), v0.h(), v0.w());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Volume& v = hr ? batch[b].hr : batch[b].lr;
    if (v.shape != v0.shape) throw ShapeMismatch("train_step: batch patch shapes disagree");
    std::copy(v.voxels.begin(), v.voxels.end(), t.slice(int(b), 0));
  }
  return t;
}

void check_loss(double v, const char* term, std::int64_t iter) {
  if (!std::isfinite(v))
    throw NonFiniteLoss(std::string("train_step: ") + term + " is non-finite at iteration " +
                        std::to_string(iter));
}

}  // namespace

Trainer::Trainer(const TrainerConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  build_generator(cfg_.gen, cfg_.seed, g_);
  build_discriminator(cfg_.disc, cfg_.seed, d_);
  build_feature_extractor(cfg_.feat, cfg_.seed, f_);
}

StepLog Trainer::train_step(const std::vector<PatchPair>& batch) {
  if (batch.empty()) throw EmptyDataset("train_step: empty batch");
  const double sigma = instance_noise_sigma(cfg_.schedule(), iter_);
  const TensorF hr = pack_batch(batch, true);
  const TensorF lr = pack_batch(batch, false);
  const AdamConfig adam{float(cfg_.lr), float(cfg_.adam_beta1), float(cfg_.adam_beta2), 1e-8f};
  // All noise of one iteration comes from a stream keyed by (seed, iter), so
  // a resumed run draws exactly the same fields.
  CounterRng noise_rng =
      CounterRng::keyed(cfg_.seed, rng_stream::kInstNoise, std::uint64_t(iter_));

  StepLog log;
  log.iter = iter_;
  log.sigma = sigma;

  // (1) generator forward, detached from any graph
  TensorF sr_detached;
  {
    Tape<float> t;
    t.grad_enabled = false;
    Ops<float> op{t};
    BoundParams<float> Pg{&t, &g_, false};
    const int x = t.leaf(lr, false);
    sr_detached = t.val(generator_forward(op, Pg, cfg_.gen, x));
  }

  // (2) discriminator update on noise-injected real and detached fake
  {
    Tape<float> t;
    Ops<float> op{t};
    BoundParams<float> Pd{&t, &d_, true};
    const int real_in = t.leaf(apply_instance_noise(hr, sigma, noise_rng), false);
    const int fake_in = t.leaf(apply_instance_noise(sr_detached, sigma, noise_rng), false);
    const int s_real = discriminator_forward(op, Pd, cfg_.disc, real_in);
    const int s_fake = discriminator_forward(op, Pd, cfg_.disc, fake_in);
    const int loss = ragan_d_node(op, s_real, s_fake);
    log.d_loss = double(t.val(loss).v[0]);
    check_loss(log.d_loss, "d_ragan", iter_);
    t.backward(loss);
    d_.zero_grads();
    Pd.harvest_grads();
    adam_step(d_, adam, iter_ + 1);
  }

  // (3) generator update on the composite loss; SR is recomputed and the
  // discriminator/extractor are evaluated with frozen parameters.
  {
    Tape<float> t;
    Ops<float> op{t};
    BoundParams<float> Pg{&t, &g_, true};
    BoundParams<float> Pd{&t, &d_, false};
    BoundParams<float> Pf{&t, &f_, false};
    const int x = t.leaf(lr, false);
    const int hr_leaf = t.leaf(hr, false);
    const int sr = generator_forward(op, Pg, cfg_.gen, x);

    const int real_in = t.leaf(apply_instance_noise(hr, sigma, noise_rng), false);
    TensorF zero_like(hr.b(), 1, hr.d(), hr.h(), hr.w());
    const TensorF fake_noise = apply_instance_noise(zero_like, sigma, noise_rng);
    const int fake_in = sigma > 0.0 ? op.add_const(sr, fake_noise) : sr;

    const int s_real = discriminator_forward(op, Pd, cfg_.disc, real_in);
    const int s_fake = discriminator_forward(op, Pd, cfg_.disc, fake_in);
    const int adv = ragan_g_node(op, s_real, s_fake);
    const int pix = l1_pixel_node(op, sr, hr_leaf);
    const int f_hr = feature_forward(op, Pf, cfg_.feat, hr_leaf);
    const int f_sr = feature_forward(op, Pf, cfg_.feat, sr);
    const int perc = perceptual_distance_node(op, f_sr, f_hr);
    const int total = op.weighted_sum({perc, pix, adv},
                                      {1.0f, float(cfg_.weights.alpha), float(cfg_.weights.beta)});
    log.g_perc = double(t.val(perc).v[0]);
    log.g_pixel = double(t.val(pix).v[0]);
    log.g_ragan = double(t.val(adv).v[0]);
    log.g_loss = double(t.val(total).v[0]);
    check_loss(log.g_perc, "g_perc", iter_);
    check_loss(log.g_pixel, "g_pixel", iter_);
    check_loss(log.g_ragan, "g_ragan", iter_);
    check_loss(log.g_loss, "g_total", iter_);
    t.backward(total);
    g_.zero_grads();
    Pg.harvest_grads();
    adam_step(g_, adam, iter_ + 1);
  }

  // (4) extractor update: frozen mode skips; joint mode runs gradient ascent
  // on the perceptual distance with a norm-1 gradient clip.
  if (cfg_.feat.mode == FeatureExtractorConfig::Mode::kJoint) {
    Tape<float> t;
    Ops<float> op{t};
    BoundParams<float> Pf{&t, &f_, true};
    const int hr_leaf = t.leaf(hr, false);
    const int sr_leaf = t.leaf(sr_detached, false);
    const int perc = perceptual_distance_node(op, feature_forward(op, Pf, cfg_.feat, sr_leaf),
                                              feature_forward(op, Pf, cfg_.feat, hr_leaf));
    log.f_loss = double(t.val(perc).v[0]);
    check_loss(*log.f_loss, "f_perc", iter_);
    t.backward(perc);
    f_.zero_grads();
    Pf.harvest_grads();
    adam_step(f_, adam, iter_ + 1, /*clip_norm=*/1.0f, /*ascend=*/true);
  }

  ++iter_;
  return log;
}

void Trainer::save_checkpoint_file(const std::string& path) const {
  nlohmann::ordered_json meta;
  meta["kind"] = "disgan-train-state";
  meta["iteration"] = iter_;
  meta["config"] = cfg_.compute_signature();
  std::vector<std::pair<std::string, const TensorF*>> tensors;
  collect_store("g/", g_, tensors);
  collect_store("d/", d_, tensors);
  collect_store("f/", f_, tensors);
  save_checkpoint(path, meta, tensors);
}

void Trainer::load_checkpoint_file(const std::string& path) {
  const LoadedCheckpoint ck = load_checkpoint(path);
  if (ck.meta.value("kind", "") != "disgan-train-state")
    throw IncompatibleCheckpoint("checkpoint: not a training state: " + path);
  if (ck.meta.value("config", nlohmann::json::object()) !=
      nlohmann::json(cfg_.compute_signature()))
    throw IncompatibleCheckpoint("checkpoint: configuration mismatch for " + path);
  restore_store(ck, "g/", g_);
  restore_store(ck, "d/", d_);
  restore_store(ck, "f/", f_);
  iter_ = ck.meta.at("iteration").get<std::int64_t>();
}

TrainResult train(const TrainerConfig& cfg, const std::vector<Volume>& volumes,
                  const std::string& out_dir, const std::string& resume_path) {
  cfg.validate();
  if (volumes.empty()) throw EmptyDataset("train: no training volumes");
  std::filesystem::create_directories(out_dir);

  std::vector<Volume> prepared;
  for (const auto& v : volumes) prepared.push_back(standardize(v));
  BatchIterator data(std::move(prepared), cfg.hr_patch, cfg.patch_stride, cfg.batch_size,
                     cfg.seed, cfg.data_noise_sigma);

  Trainer trainer(cfg);
  if (!resume_path.empty()) trainer.load_checkpoint_file(resume_path);

  const std::string log_path = out_dir + "/train_log.jsonl";
  std::ofstream logf(log_path, trainer.iteration() == 0 ? std::ios::trunc : std::ios::app);
  if (!logf) throw ParseError("train: cannot open log " + log_path);

  StepLog last;
  while (trainer.iteration() < cfg.iterations) {
    const auto batch = data.batch(trainer.iteration());
    last = trainer.train_step(batch);
    logf << last.to_json().dump() << "\n";
    logf.flush();
    if (!logf) throw ParseError("train: log write failed: " + log_path);
    if (trainer.iteration() % cfg.checkpoint_every == 0 &&
        trainer.iteration() < cfg.iterations) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_%06lld.ckpt",
                    static_cast<long long>(trainer.iteration()));
      trainer.save_checkpoint_file(out_dir + "/" + name);
    }
  }
  const std::string final_path = out_dir + "/checkpoint_final.ckpt";
  trainer.save_checkpoint_file(final_path);
  return {final_path, log_path, last};
}

}  // namespace disgan
