#pragma once

#include <cmath>
#include <cstdint>

namespace kineq::rng {

// Counter-based streams: every variate is a pure function of
// (seed, stream, counter), so draws are reproducible regardless of
// scheduling order and two propagations that share a seed consume
// identical increments (common random numbers).

inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t bits(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t counter) {
  return mix(seed + mix(stream + mix(counter)));
}

/// Uniform in the open interval (0, 1).
inline double uniform(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t counter) {
  const std::uint64_t b = bits(seed, stream, counter);
  return (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; consumes counters 2k and 2k+1.
inline double gaussian(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t slot) {
  const double u1 = uniform(seed, stream, 2 * slot);
  const double u2 = uniform(seed, stream, 2 * slot + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

/// Convenience view of one per-entity stream.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id) {}

  double uniform(std::uint64_t counter) const {
    return rng::uniform(seed_, stream_, counter);
  }
  double gaussian(std::uint64_t slot) const {
    return rng::gaussian(seed_, stream_, slot);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace kineq::rng
