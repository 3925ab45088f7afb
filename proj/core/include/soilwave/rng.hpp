#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace soilwave::rng {

/// SplitMix64 (Steele, Lea & Flood, 2014). One 64-bit state word, one
/// multiply-xorshift mix per draw. The constants below fully pin the output
/// sequence, so identically seeded generators produce identical streams on
/// every platform and in every language that copies these constants; the
/// floating-point helpers build on the integer stream only through exactly
/// specified arithmetic.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1): top 53 bits of one draw scaled by 2^-53.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// One coin flip with probability p (clamped to [0, 1]); consumes one draw.
  bool next_bernoulli(double p) { return next_double() < p; }

  /// Standard normal via the trigonometric Box-Muller transform. Consumes
  /// exactly two uniform draws and returns the cosine branch only, so the
  /// stream position is a pure function of the call count.
  double next_normal() {
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    double u1 = 1.0 - next_double();  // (0, 1]
    double u2 = next_double();        // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  double next_normal(double mean, double sigma) { return mean + sigma * next_normal(); }

  /// Index in [0, n), n > 0. Plain modulo of one draw; the bias is below
  /// 2^-32 for every n used here and the mapping stays platform-stable.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  /// Seed of an independent child stream. Gateways, sweep rows and grid
  /// points each get their own stream so evaluation order cannot perturb
  /// results: stream_seed(s, k) = mix(s XOR (k+1)*0x9E3779B97F4A7C15).
  static std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream_id) {
    SplitMix64 g(seed ^ ((stream_id + 1) * 0x9E3779B97F4A7C15ULL));
    return g.next_u64();
  }

 private:
  std::uint64_t state_;
};

/// Fisher-Yates shuffle driven by the pinned generator.
template <typename T>
void shuffle(std::vector<T>& values, SplitMix64& gen) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[gen.next_below(i)]);
  }
}

}  // namespace soilwave::rng
