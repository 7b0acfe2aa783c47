#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace pibound {

// Counter-based stream seeding: every consumer (bootstrap draw b, probe trial
// t, Monte Carlo rep r, ...) owns an independent generator keyed by
// (master seed, stream tag, index). Parallel and serial execution therefore
// produce bit-identical results regardless of scheduling.

namespace rng_stream {
inline constexpr std::uint64_t kBootstrapDraw = 0x626f6f7473747261ULL;
inline constexpr std::uint64_t kProbeTrial = 0x70726f6265747269ULL;
inline constexpr std::uint64_t kDgp = 0x6467702d64726177ULL;
inline constexpr std::uint64_t kMonteCarloRep = 0x6d632d7265702d30ULL;
}  // namespace rng_stream

/// SplitMix64 finalizer; also used to hash-combine stream keys.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_tag, std::uint64_t index)
      : state_(mix64(mix64(mix64(seed) ^ stream_tag) ^ index)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer in [0, n). Lemire's multiply-shift rejection.
  std::uint64_t next_below(std::uint64_t n) {
    std::uint64_t x = next_u64();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0ULL - n) % n;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<unsigned __int128>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via Box-Muller (cached spare).
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Multinomial(n; 1/n,...,1/n) resample counts: n i.i.d. draws with
/// replacement from {0,...,n-1}.
inline std::vector<double> multinomial_counts(std::size_t n, RngStream& rng) {
  std::vector<double> counts(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) counts[rng.next_below(n)] += 1.0;
  return counts;
}

}  // namespace pibound
