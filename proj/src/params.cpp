#include "disgan/params.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace disgan {

double grad_norm(const ParamStore& store) {
  double ss = 0.0;
  for (int i = 0; i < store.size(); ++i) {
    const auto& g = const_cast<ParamStore&>(store).entry(i).grad;
    for (float x : g.v) ss += double(x) * double(x);
  }
  return std::sqrt(ss);
}

void adam_step(ParamStore& store, const AdamConfig& cfg, std::int64_t t,
               float clip_norm, bool ascend) {
  double scale = ascend ? -1.0 : 1.0;
  if (clip_norm > 0.0f) {
    const double n = grad_norm(store);
    if (n > clip_norm) scale *= double(clip_norm) / n;
  }
  const double bc1 = 1.0 - std::pow(double(cfg.beta1), double(t));
  const double bc2 = 1.0 - std::pow(double(cfg.beta2), double(t));
  for (int i = 0; i < store.size(); ++i) {
    ParamEntry& e = store.entry(i);
    for (std::int64_t k = 0; k < e.value.numel(); ++k) {
      const float g = float(double(e.grad.v[k]) * scale);
      e.m.v[k] = cfg.beta1 * e.m.v[k] + (1.0f - cfg.beta1) * g;
      e.v.v[k] = cfg.beta2 * e.v.v[k] + (1.0f - cfg.beta2) * g * g;
      const float mhat = float(double(e.m.v[k]) / bc1);
      const float vhat = float(double(e.v.v[k]) / bc2);
      e.value.v[k] -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

namespace {

constexpr char kMagic[8] = {'D', 'G', 'C', 'K', 'P', 'T', '0', '1'};
constexpr int kVersion = 1;

void append_u64(std::vector<unsigned char>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back((v >> (8 * i)) & 0xFF);
}

std::uint64_t read_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<std::pair<std::string, const TensorF*>>& tensors) {
  nlohmann::ordered_json manifest;
  manifest["version"] = kVersion;
  manifest["meta"] = meta;
  auto dir = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    nlohmann::ordered_json e;
    e["name"] = name;
    e["shape"] = t->shape;
    e["offset"] = offset;
    dir.push_back(e);
    offset += std::uint64_t(t->numel()) * 4;
  }
  manifest["tensors"] = dir;
  const std::string mstr = manifest.dump();

  std::vector<unsigned char> out;
  out.reserve(16 + mstr.size() + offset);
  out.insert(out.end(), kMagic, kMagic + 8);
  append_u64(out, mstr.size());
  out.insert(out.end(), mstr.begin(), mstr.end());
  for (const auto& [name, t] : tensors) {
    (void)name;
    for (float x : t->v) {
      const auto u = std::bit_cast<std::uint32_t>(x);
      for (int i = 0; i < 4; ++i) out.push_back((u >> (8 * i)) & 0xFF);
    }
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError("checkpoint: cannot open " + tmp);
    f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
    f.flush();
    if (!f) throw ParseError("checkpoint: write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("checkpoint: cannot open " + path);
  f.seekg(0, std::ios::end);
  const std::size_t size = std::size_t(f.tellg());
  f.seekg(0);
  std::vector<unsigned char> buf(size);
  f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(size));
  if (!f) throw TruncatedFile("checkpoint: short read: " + path);

  if (size < 16 || std::memcmp(buf.data(), kMagic, 8) != 0)
    throw IncompatibleCheckpoint("checkpoint: bad or missing magic in " + path);
  const std::uint64_t mlen = read_u64(buf.data() + 8);
  if (16 + mlen > size) throw TruncatedFile("checkpoint: manifest truncated");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(buf.begin() + 16, buf.begin() + 16 + std::ptrdiff_t(mlen));
  } catch (const nlohmann::json::exception& e) {
    throw IncompatibleCheckpoint(std::string("checkpoint: manifest parse error: ") + e.what());
  }
  if (!manifest.contains("version") || manifest["version"].get<int>() != kVersion)
    throw IncompatibleCheckpoint("checkpoint: version tag mismatch (want " +
                                 std::to_string(kVersion) + ")");

  LoadedCheckpoint ck;
  ck.meta = manifest.value("meta", nlohmann::json::object());
  const std::size_t payload0 = 16 + std::size_t(mlen);
  for (const auto& e : manifest["tensors"]) {
    const std::string name = e["name"].get<std::string>();
    std::array<int, 5> shape{};
    for (int i = 0; i < 5; ++i) shape[i] = e["shape"][std::size_t(i)].get<int>();
    TensorF t(shape[0], shape[1], shape[2], shape[3], shape[4]);
    const std::size_t off = payload0 + e["offset"].get<std::uint64_t>();
    const std::size_t bytes = std::size_t(t.numel()) * 4;
    if (off + bytes > size)
      throw TruncatedFile("checkpoint: tensor payload truncated: " + name);
    for (std::int64_t i = 0; i < t.numel(); ++i) {
      std::uint32_t u = 0;
      for (int k = 0; k < 4; ++k) u |= std::uint32_t(buf[off + 4 * i + k]) << (8 * k);
      t.v[std::size_t(i)] = std::bit_cast<float>(u);
    }
    ck.tensors.emplace_back(name, std::move(t));
  }
  return ck;
}

void collect_store(const std::string& prefix, const ParamStore& store,
                   std::vector<std::pair<std::string, const TensorF*>>& out) {
  auto& s = const_cast<ParamStore&>(store);
  for (int i = 0; i < s.size(); ++i)
    out.emplace_back(prefix + s.entry(i).name, &s.entry(i).value);
  for (int i = 0; i < s.size(); ++i)
    out.emplace_back(prefix + "adam.m." + s.entry(i).name, &s.entry(i).m);
  for (int i = 0; i < s.size(); ++i)
    out.emplace_back(prefix + "adam.v." + s.entry(i).name, &s.entry(i).v);
}

void restore_store(const LoadedCheckpoint& ck, const std::string& prefix, ParamStore& store) {
  for (int i = 0; i < store.size(); ++i) {
    ParamEntry& e = store.entry(i);
    const TensorF* val = ck.find(prefix + e.name);
    const TensorF* m = ck.find(prefix + "adam.m." + e.name);
    const TensorF* v = ck.find(prefix + "adam.v." + e.name);
    if (!val || !m || !v)
      throw IncompatibleCheckpoint("checkpoint: missing tensor " + prefix + e.name);
    if (val->shape != e.value.shape)
      throw IncompatibleCheckpoint("checkpoint: shape mismatch for " + prefix + e.name +
                                   " (" + val->shape_str() + " vs " + e.value.shape_str() + ")");
    e.value = *val;
    e.m = *m;
    e.v = *v;
  }
}

}  // namespace disgan
