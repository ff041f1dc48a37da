#pragma once

#include <cmath>
#include <cstdint>

namespace saaformer {

// Counter-based deterministic random stream.
//
// Output i of a stream with key k is splitmix64_mix(k + i * GAMMA), the
// SplitMix64 construction with a fixed gamma. Streams never share state:
// each draw is a pure function of (key, counter). Child streams are derived
// by mixing a label into the parent key, so a single experiment seed fans
// out into independent init / shuffle / dropout / data streams.
class RngStream {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  explicit RngStream(std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  // Child stream key for a labelled purpose (init, shuffle, ...).
  static std::uint64_t derive(std::uint64_t key, std::uint64_t label) {
    return mix(key ^ mix(label + kGamma));
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

  // Uniform in [0, 1), 53 mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Standard normal via Box-Muller; no rejection, so consumption per call
  // is fixed and the stream stays reproducible.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n); rejection keeps it unbiased and, being
  // driven by the counter, still deterministic.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t limit = n * ((~0ull) / n);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stream labels used throughout the experiment pipeline.
namespace streams {
constexpr std::uint64_t kInit = 1;
constexpr std::uint64_t kShuffle = 2;
constexpr std::uint64_t kDropout = 3;
constexpr std::uint64_t kData = 4;
}  // namespace streams

}  // namespace saaformer
