// random.hpp -- per-pixel random streams.
//
// Every pixel draws from its own generator keyed by (seed, pixel index,
// stream), so results never depend on evaluation order or thread count.
#pragma once

#include <cstdint>
#include <random>

namespace ecnoise {

enum class Stream : std::uint64_t {
  Threshold = 0x42,   // B_i
  Leakage = 0x58,     // X_i
  Counts = 0x43,      // binomial counts of noise images
  Events = 0x45,      // event-stream realisation
  Jitter = 0x4a,      // optimiser start perturbations
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 pixel_rng(std::uint64_t seed, std::uint64_t index, Stream stream) {
  const std::uint64_t key =
      splitmix64(splitmix64(seed ^ (static_cast<std::uint64_t>(stream) << 56)) + index);
  return std::mt19937_64(key);
}

/// Normal(mean, sd^2) restricted to [0, inf) by rejection.
template <class Rng>
double truncated_normal(Rng& rng, double mean, double sd) {
  if (sd == 0.0) return mean < 0.0 ? 0.0 : mean;
  std::normal_distribution<double> dist(mean, sd);
  for (;;) {
    const double x = dist(rng);
    if (x >= 0.0) return x;
  }
}

}  // namespace ecnoise
