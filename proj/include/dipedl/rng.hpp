#pragma once

// Deterministic random number generation. The generator is xoshiro256++ with
// 256 bits of state, seeded from a single 64-bit value through splitmix64.
// Every stochastic routine in the library draws from this generator, so a
// fixed seed reproduces the same stream on every run.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace dipedl {

struct RandomSeed {
  std::uint64_t value = 0;
};

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Derives an independent child seed for a named purpose (data generation,
// weight init, ...) so that streams do not overlap.
inline RandomSeed substream(RandomSeed root, std::uint64_t tag) {
  std::uint64_t s = root.value ^ (0xd1342543de82ef95ULL * (tag + 1));
  return RandomSeed{detail::splitmix64_next(s)};
}

class Rng {
 public:
  explicit Rng(RandomSeed seed) {
    std::uint64_t s = seed.value;
    for (auto& word : state_) word = detail::splitmix64_next(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0,1); never returns 0 or 1, so logs and
  // inverse powers of the result stay finite.
  double u01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal() {
    const double u1 = u01();
    const double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Gamma(shape, 1) via the Marsaglia-Tsang squeeze; the shape < 1 case is
  // boosted through Gamma(shape + 1) and a uniform power.
  double gamma(double shape) {
    if (!(shape > 0.0) || !std::isfinite(shape)) {
      throw std::domain_error("Rng::gamma: shape must be positive and finite");
    }
    if (shape < 1.0) {
      const double u = u01();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = u01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Uniform integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::domain_error("Rng::below: bound must be > 0");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::uint64_t state_[4];
};

}  // namespace dipedl
