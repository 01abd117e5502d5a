#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "disgan/rng.hpp"
#include "disgan/tape.hpp"
#include "disgan/tensor.hpp"

namespace disgan {

/// Named parameter tensor with its gradient and Adam moments. Creation order
/// is fixed by the network builders, which makes initialization and
/// checkpoint layout deterministic.
struct ParamEntry {
  std::string name;
  TensorF value;
  TensorF grad;
  TensorF m;
  TensorF v;
};

class ParamStore {
 public:
  int add(const std::string& name, TensorF value) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    ParamEntry e;
    e.name = name;
    const auto& s = value.shape;
    e.grad = TensorF(s[0], s[1], s[2], s[3], s[4]);
    e.m = e.grad;
    e.v = e.grad;
    e.value = std::move(value);
    entries_.push_back(std::move(e));
    index_[name] = int(entries_.size()) - 1;
    return int(entries_.size()) - 1;
  }

  int find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }
  ParamEntry& at(const std::string& name) {
    const int i = find(name);
    if (i < 0) throw ConfigError("unknown parameter: " + name);
    return entries_[std::size_t(i)];
  }
  const ParamEntry& at(const std::string& name) const {
    return const_cast<ParamStore*>(this)->at(name);
  }
  ParamEntry& entry(int i) { return entries_[std::size_t(i)]; }
  int size() const { return int(entries_.size()); }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
  }

  void zero_grads() {
    for (auto& e : entries_)
      std::fill(e.grad.v.begin(), e.grad.v.end(), 0.0f);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
  }

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, int> index_;
};

/// Kaiming-normal fan-in initialization for a leaky rectifier with the given
/// negative slope: std = sqrt(2 / ((1 + slope^2) * fan_in)).
inline TensorF kaiming_conv3(CounterRng& rng, int co, int ci, float slope = 0.2f) {
  TensorF w(co, ci, 3, 3, 3);
  const double std = std::sqrt(2.0 / ((1.0 + double(slope) * slope) * (double(ci) * 27.0)));
  for (auto& x : w.v) x = float(rng.next_gaussian() * std);
  return w;
}

inline TensorF kaiming_conv1(CounterRng& rng, int co, int ci, float slope = 0.2f) {
  TensorF w(co, ci, 1, 1, 1);
  const double std = std::sqrt(2.0 / ((1.0 + double(slope) * slope) * double(ci)));
  for (auto& x : w.v) x = float(rng.next_gaussian() * std);
  return w;
}

inline TensorF zero_bias(int co) { return TensorF(co, 1, 1, 1, 1); }

// --- Adam ------------------------------------------------------------------

struct AdamConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

/// Returns the global L2 norm of all gradients in the store.
double grad_norm(const ParamStore& store);

/// One Adam update over every entry. `t` is the 1-based step count for bias
/// correction. If clip_norm > 0 the global gradient norm is clipped first;
/// if ascend is set the gradients are negated (gradient ascent).
void adam_step(ParamStore& store, const AdamConfig& cfg, std::int64_t t,
               float clip_norm = 0.0f, bool ascend = false);

// --- tape binding ------------------------------------------------------------

/// Binds store entries to tape leaves on demand (one leaf per entry per tape)
/// and copies tape gradients back into the store after backward().
template <class T>
struct BoundParams {
  BoundParams() = default;
  BoundParams(Tape<T>* t, ParamStore* s, bool train)
      : tape(t), store(s), trainable(train) {}

  Tape<T>* tape = nullptr;
  ParamStore* store = nullptr;
  bool trainable = true;
  /// When set, leaf values come from this table (indexed by store entry)
  /// instead of the store; used by finite-difference oracles that perturb
  /// parameters at higher precision than the store holds.
  const std::vector<TensorT<T>>* override_values = nullptr;
  std::unordered_map<int, int> ids;  // store index -> node id

  int operator()(const std::string& name) {
    const int si = store->find(name);
    if (si < 0) throw ConfigError("unknown parameter: " + name);
    auto it = ids.find(si);
    if (it != ids.end()) return it->second;
    TensorT<T> value = override_values ? (*override_values)[std::size_t(si)]
                                       : store->entry(si).value.template cast<T>();
    const int id = tape->leaf(std::move(value), trainable);
    ids.emplace(si, id);
    return id;
  }

  void harvest_grads() {
    for (const auto& [si, id] : ids) {
      const auto& g = tape->node(id).grad;
      if (g.numel() == 0) continue;
      auto& dst = store->entry(si).grad;
      for (std::int64_t i = 0; i < g.numel(); ++i) dst.v[i] += float(g.v[i]);
    }
  }
};

// --- checkpoint archive ------------------------------------------------------

/// Single-file archive: 8-byte magic, u64 manifest length, JSON manifest
/// (version, caller metadata, tensor directory), then float32 little-endian
/// payload blobs. Writes are atomic (temp file + rename).
void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<std::pair<std::string, const TensorF*>>& tensors);

struct LoadedCheckpoint {
  nlohmann::json meta;
  std::vector<std::pair<std::string, TensorF>> tensors;

  const TensorF* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// Copies every `prefix`-named tensor of the checkpoint into matching store
/// entries (value, adam.m.*, adam.v.*). Throws IncompatibleCheckpoint on
/// missing entries or shape mismatches.
void restore_store(const LoadedCheckpoint& ck, const std::string& prefix, ParamStore& store);

/// Appends value + Adam moment tensors of a store under `prefix`.
void collect_store(const std::string& prefix, const ParamStore& store,
                   std::vector<std::pair<std::string, const TensorF*>>& out);

}  // namespace disgan
