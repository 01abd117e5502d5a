#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace disgan {

/// Counter-based 64-bit PRNG (SplitMix64). The state is a single u64 that
/// advances by the golden-ratio increment; each output is an avalanche mix of
/// the counter. Integer-only, so sequences are identical on every platform.
/// Streams are derived by mixing a stream tag and index into the seed, which
/// makes keyed sub-streams (init / shuffle / noise / ...) independent without
/// any shared mutable state.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : state_(seed) {}

  /// Independent stream for (seed, stream_tag, index).
  static CounterRng keyed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index = 0) {
    return CounterRng(mix(mix(mix(seed) ^ stream) ^ index));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform in [0,1) with 53 random bits; exact power-of-two scaling.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [0,1) with 24 random bits.
  float next_float() { return float(next_u64() >> 40) * 0x1.0p-24f; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Standard normal via Box-Muller (single value; the pair's second half is
  /// discarded so the state stays a plain counter).
  double next_gaussian() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Uniform integer in [0, n). Uses modulo reduction; the bias is < n / 2^64.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  /// In-place Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = std::size_t(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

// Stream tags used across the project (arbitrary but frozen constants).
namespace rng_stream {
inline constexpr std::uint64_t kInit = 0x696E6974ULL;       // network init
inline constexpr std::uint64_t kShuffle = 0x73687566ULL;    // batch order
inline constexpr std::uint64_t kInstNoise = 0x696E7374ULL;  // instance noise
inline constexpr std::uint64_t kDataNoise = 0x64617461ULL;  // degradation noise
inline constexpr std::uint64_t kPhantom = 0x7068616EULL;    // phantom synthesis
}  // namespace rng_stream

}  // namespace disgan
