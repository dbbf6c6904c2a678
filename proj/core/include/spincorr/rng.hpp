#pragma once

#include <cstdint>

namespace spincorr {

// Counter-derived RNG streams: every shot/trajectory gets its own generator
// seeded from (master seed, stream id), so results do not depend on how work
// is scheduled across threads.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }
};

inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t id) {
  SplitMix64 mix(master ^ (0x6a09e667f3bcc909ULL + id * 0x9e3779b97f4a7c15ULL));
  mix.next();
  return mix.next();
}

inline SplitMix64 stream_rng(std::uint64_t master, std::uint64_t id) {
  return SplitMix64(derive_stream(master, id));
}

}  // namespace spincorr
