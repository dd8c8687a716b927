#pragma once

#include <cstdint>
#include <span>

#include "mploc/geometry.hpp"

// Counter-based random value derivation. Every random number is a pure
// function of (master seed, realization index, site coordinates, lane),
// so fields are reproducible bit-for-bit and stable under region
// extension and any parallel schedule.

namespace mploc::rng {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix(std::uint64_t z) {
  z += kGamma;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix(h ^ (v + kGamma + (h << 6) + (h >> 2)));
}

inline std::uint64_t site_counter(std::uint64_t seed, std::uint64_t realization,
                                  const Site& site, std::uint64_t lane = 0) {
  std::uint64_t h = mix(seed);
  h = combine(h, realization);
  for (Coord c : site) h = combine(h, static_cast<std::uint64_t>(c));
  return combine(h, lane);
}

// Uniform in the open interval (0,1); 53-bit resolution, never 0 or 1.
inline double to_unit(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t realization, const Site& site,
                      std::uint64_t lane = 0) {
  return to_unit(site_counter(seed, realization, site, lane));
}

// Small sequential generator for test scaffolding (random configurations
// and the like). Deterministic from its seed.
class Sequence {
 public:
  explicit Sequence(std::uint64_t seed) : state_(mix(seed)) {}
  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }
  double next_unit() { return to_unit(next_u64()); }
  // Uniform integer in [lo, hi] inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }
  double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

 private:
  std::uint64_t state_;
};

}  // namespace mploc::rng
