#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "types.hpp"

namespace sinest {

// splitmix64 step (Steele et al.); used both as the generator core and to
// derive independent per-trial streams from a master seed
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// counter-based stream derivation: hashing the indices through splitmix64
// keeps trials independent of worker count and iteration order
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  uint64_t s = master;
  uint64_t h = splitmix64(s);
  s = h ^ (a + 0x9E3779B97F4A7C15ull);
  h = splitmix64(s);
  s = h ^ (b + 0xD1B54A32D192ED03ull);
  h = splitmix64(s);
  s = h ^ (c + 0x8CB92BA72F3D8DD7ull);
  return splitmix64(s);
}

// small self-contained generator; avoids std::normal_distribution so that
// streams are bit-identical across standard library implementations
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() { return splitmix64(state_); }

  // uniform on (0,1), never exactly 0 or 1
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller, one cached value
  double gauss() {
    if (have_cache_) {
      have_cache_ = false;
      return cache_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * std::numbers::pi * u2;
    cache_ = r * std::sin(t);
    have_cache_ = true;
    return r * std::cos(t);
  }

  // circular complex gaussian with E|z|^2 = 1
  cxd cgauss() {
    constexpr double half = std::numbers::sqrt2 / 2.0;
    return {half * gauss(), half * gauss()};
  }

 private:
  uint64_t state_;
  double cache_ = 0.0;
  bool have_cache_ = false;
};

}  // namespace sinest
