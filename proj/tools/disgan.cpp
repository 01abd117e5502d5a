#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "disgan/datapipe.hpp"
#include "disgan/dwt3d.hpp"
#include "disgan/inference.hpp"
#include "disgan/metrics.hpp"
#include "disgan/trainer.hpp"
#include "disgan/volume.hpp"
#include "disgan/volume_io.hpp"

namespace fs = std::filesystem;
using namespace disgan;

namespace {

// Loads a trained generator from a checkpoint: the architecture comes from
// the config echo in the manifest, the weights from the "g/" tensors.
std::pair<GeneratorConfig, ParamStore> load_generator(const std::string& path) {
  const LoadedCheckpoint ck = load_checkpoint(path);
  if (ck.meta.value("kind", "") != "disgan-train-state")
    throw IncompatibleCheckpoint("model: not a training checkpoint: " + path);
  const GeneratorConfig gcfg = GeneratorConfig::from_json(ck.meta.at("config").at("generator"));
  ParamStore g;
  build_generator(gcfg, 0, g);
  restore_store(ck, "g/", g);
  return {gcfg, std::move(g)};
}

std::array<int, 3> parse_size(const std::string& s) {
  std::array<int, 3> out{};
  const auto p1 = s.find('x');
  if (p1 == std::string::npos) {
    const int n = std::stoi(s);
    return {n, n, n};
  }
  const auto p2 = s.find('x', p1 + 1);
  if (p2 == std::string::npos) throw ConfigError("size must be N or DxHxW");
  out[0] = std::stoi(s.substr(0, p1));
  out[1] = std::stoi(s.substr(p1 + 1, p2 - p1 - 1));
  out[2] = std::stoi(s.substr(p2 + 1));
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"DISGAN: 3D MRI super-resolution GAN with a wavelet-informed discriminator"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  bool deterministic = std::getenv("DISGAN_DETERMINISTIC") != nullptr;
  app.add_option("--seed", seed, "base seed for any randomized subcommand");
  app.add_flag("--deterministic", deterministic,
               "fixed accumulation order (always on in this implementation; also via "
               "DISGAN_DETERMINISTIC=1)");
  (void)deterministic;

  // train
  auto* train_cmd = app.add_subcommand("train", "run the adversarial training loop");
  std::string config_path, resume_path, manifest_override, out_override;
  train_cmd->add_option("--config", config_path, "trainer config JSON")->required();
  train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
  train_cmd->add_option("--manifest", manifest_override, "dataset manifest (overrides config)");
  train_cmd->add_option("--out", out_override, "output directory (overrides config)");

  // sr
  auto* sr_cmd = app.add_subcommand("sr", "super-resolve a whole LR volume");
  std::string model_path, in_path, out_path;
  int lr_patch = 32, lr_stride = 16;
  bool raw_input = false;
  sr_cmd->add_option("--model", model_path, "trained checkpoint")->required();
  sr_cmd->add_option("--in", in_path, "input LR volume (.nii/.rawv)")->required();
  sr_cmd->add_option("--out", out_path, "output SR volume path")->required();
  sr_cmd->add_option("--patch", lr_patch, "LR patch size");
  sr_cmd->add_option("--stride", lr_stride, "LR patch stride");
  sr_cmd->add_flag("--raw", raw_input, "skip input standardization");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM/NRMSE report");
  std::string ref_path, test_path, freq_path;
  int crop = 50;
  eval_cmd->add_option("--ref", ref_path, "reference volume")->required();
  eval_cmd->add_option("--test", test_path, "volume under test")->required();
  eval_cmd->add_option("--freq-residual", freq_path, "write center-cropped spectrum residual");
  eval_cmd->add_option("--crop", crop, "frequency-space center crop");

  // noise
  auto* noise_cmd = app.add_subcommand("noise", "noise-robustness protocol over 4 levels");
  std::string nz_model, nz_ref;
  int nz_patch = 32, nz_stride = 16;
  noise_cmd->add_option("--model", nz_model, "trained checkpoint")->required();
  noise_cmd->add_option("--ref", nz_ref, "clean HR reference volume")->required();
  noise_cmd->add_option("--patch", nz_patch, "LR patch size");
  noise_cmd->add_option("--stride", nz_stride, "LR patch stride");

  // dwt
  auto* dwt_cmd = app.add_subcommand("dwt", "write the 8 Haar sub-bands of a volume");
  std::string dwt_in, dwt_out_dir;
  dwt_cmd->add_option("--in", dwt_in, "input volume")->required();
  dwt_cmd->add_option("--out-dir", dwt_out_dir, "output directory")->required();

  // phantom
  auto* ph_cmd = app.add_subcommand("phantom", "write a seeded synthetic phantom");
  std::string ph_size = "64", ph_out;
  ph_cmd->add_option("--size", ph_size, "extents: N or DxHxW (even, >= 32)");
  ph_cmd->add_option("--out", ph_out, "output volume path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cerr << app.help();  // stdout is reserved for JSON payloads
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  if (train_cmd->parsed()) {
    std::ifstream cf(config_path);
    if (!cf) throw ParseError("train: cannot open config " + config_path);
    nlohmann::json cj;
    try {
      cf >> cj;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("train: config parse error: ") + e.what());
    }
    TrainerConfig cfg = TrainerConfig::from_json(cj);
    if (app.count("--seed")) cfg.seed = seed;
    const std::string manifest_path =
        !manifest_override.empty() ? manifest_override : cj.value("manifest", "");
    const std::string out_dir = !out_override.empty() ? out_override : cj.value("out_dir", "");
    if (manifest_path.empty()) throw ConfigError("train: no dataset manifest given");
    if (out_dir.empty()) throw ConfigError("train: no output directory given");

    const DatasetManifest manifest = DatasetManifest::load(manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();
    std::vector<Volume> volumes;
    for (const auto& p : manifest.paths("train")) {
      const fs::path vp = fs::path(p).is_absolute() ? fs::path(p) : base / p;
      volumes.push_back(read_volume(vp.string()));
    }
    if (volumes.empty()) throw EmptyDataset("train: manifest has no train volumes");
    const TrainResult res = train(cfg, volumes, out_dir, resume_path);
    nlohmann::ordered_json j;
    j["checkpoint"] = res.final_checkpoint;
    j["log"] = res.log_path;
    j["iterations"] = cfg.iterations;
    j["final"] = res.last.to_json();
    std::cout << j.dump() << "\n";
    return 0;
  }

  if (sr_cmd->parsed()) {
    auto [gcfg, g] = load_generator(model_path);
    Volume lr = read_volume(in_path);
    if (!raw_input) lr = standardize(lr);
    const Volume sr = super_resolve(gcfg, g, lr, lr_patch, lr_stride);
    write_volume(sr, out_path);
    nlohmann::ordered_json j;
    j["out"] = out_path;
    j["shape"] = sr.shape;
    std::cout << j.dump() << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    const Volume ref = read_volume(ref_path);
    const Volume test = read_volume(test_path);
    const MetricReport rep = evaluate_volumes(test, ref);
    nlohmann::ordered_json j = rep.to_json();
    if (!freq_path.empty()) {
      write_volume(freq_residual(test, ref, crop), freq_path);
      j["freq_residual"] = freq_path;
    }
    std::cout << j.dump() << "\n";
    return 0;
  }

  if (noise_cmd->parsed()) {
    auto [gcfg, g] = load_generator(nz_model);
    const Volume hr = standardize(read_volume(nz_ref));
    const auto reports =
        noise_robustness_protocol(gcfg, g, hr, {0.0, 0.1, 0.2, 0.3}, seed, nz_patch, nz_stride);
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) arr.push_back(r.to_json());
    std::cout << arr.dump() << "\n";
    return 0;
  }

  if (dwt_cmd->parsed()) {
    const Volume v = read_volume(dwt_in);
    const SubbandSet s = dwt3_forward(v);
    fs::create_directories(dwt_out_dir);
    const std::string stem = fs::path(dwt_in).stem().string();
    nlohmann::ordered_json j;
    j["out_dir"] = dwt_out_dir;
    auto files = nlohmann::ordered_json::array();
    for (int b = 0; b < 8; ++b) {
      Volume band(s.band_shape[0], s.band_shape[1], s.band_shape[2]);
      band.voxels = s.bands[std::size_t(b)];
      band.spacing = {v.spacing[0] * 2, v.spacing[1] * 2, v.spacing[2] * 2};
      const std::string path =
          (fs::path(dwt_out_dir) / (stem + "_" + SubbandSet::kBandNames[std::size_t(b)] + ".rawv"))
              .string();
      write_volume(band, path);
      files.push_back(path);
    }
    j["bands"] = files;
    std::cout << j.dump() << "\n";
    return 0;
  }

  if (ph_cmd->parsed()) {
    const Volume v = phantom(seed, parse_size(ph_size));
    write_volume(v, ph_out);
    nlohmann::ordered_json j;
    j["out"] = ph_out;
    j["shape"] = v.shape;
    j["seed"] = seed;
    std::cout << j.dump() << "\n";
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
