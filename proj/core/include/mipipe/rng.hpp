#pragma once

#include <cstdint>
#include <stdexcept>

namespace mipipe {

// Counter-based random stream built on the SplitMix64 finalizer (Steele,
// Lea & Flood 2014). Output i is mix64(key + i*GOLDEN), so a stream is a
// pure function of (key, counter) and child streams derived from the key
// are independent of how many values the parent has produced. All
// randomness in the library flows through keyed streams of this type,
// which is what makes results independent of thread scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  // Child stream keyed by (parent key, word). Does not consume state.
  RngStream derive(std::uint64_t word) const {
    return RngStream(mix64(key_ ^ mix64(word * kGolden + 0x632be59bd9b4e019ULL)));
  }
  RngStream derive(std::uint64_t a, std::uint64_t b) const { return derive(a).derive(b); }
  RngStream derive(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    return derive(a).derive(b).derive(c);
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  // Uniform on [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0,1); safe to feed into inverse CDFs.
  double uniform_oo() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Unbiased integer in [0, n) by rejection (Lemire 2019).
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    using u128 = unsigned __int128;
    std::uint64_t x = next_u64();
    u128 m = static_cast<u128>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<u128>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  // Standard normal via the inverse CDF; implemented in specfun.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Chi-squared draw: 2 * Gamma(df/2) via Marsaglia-Tsang squeeze.
  double chi_squared(double df);

  std::uint64_t key() const { return key_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double gamma_shape(double k);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stage tags used when deriving sub-streams, so different pipeline stages
// fed from one user seed never share a stream.
namespace rng_tag {
inline constexpr std::uint64_t simulate = 0xA1;
inline constexpr std::uint64_t ampute = 0xA2;
inline constexpr std::uint64_t impute = 0xA3;
inline constexpr std::uint64_t bench = 0xA4;
}  // namespace rng_tag

}  // namespace mipipe
