#pragma once

#include <cmath>
#include <cstdint>

namespace tni {

/// SplitMix64 finalizer (a bijection on 64-bit words).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based standard-normal stream: the draw for (realization, element)
/// is a pure function of (key, realization, element), so results do not
/// depend on evaluation order or thread count.
struct GaussianStream {
  std::uint64_t key = 0;

  static GaussianStream keyed(std::uint64_t seed, std::uint64_t stream) {
    return {mix64(seed ^ mix64(stream + 0x51ed2701f3a0c8e5ULL))};
  }

  double normal(std::uint64_t realization, std::uint64_t element) const {
    const std::uint64_t base =
        mix64(key ^ mix64(realization * 0x9e3779b97f4a7c15ULL + element));
    const std::uint64_t w1 = mix64(base);
    const std::uint64_t w2 = mix64(base ^ 0xda3e39cb94b95bdbULL);
    const double u1 = (static_cast<double>(w1 >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = static_cast<double>(w2 >> 11) * 0x1.0p-53;          // [0,1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }
};

}  // namespace tni
