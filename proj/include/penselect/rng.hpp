// Copyright (c) 2026 penselect contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef PENSELECT_RNG_HPP
#define PENSELECT_RNG_HPP

#include <cmath>
#include <cstdint>

namespace penselect::rng {

// splitmix64 finalizer; also used to derive stream states from (seed, stream).
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based 64-bit generator (splitmix64).  The whole state is one
// counter, so per-trial streams derive from (seed, stream) and reproduce
// independently of scheduling order.
class Engine {
 public:
  explicit Engine(std::uint64_t seed) noexcept : state_(mix64(seed)) {}

  static Engine for_stream(std::uint64_t seed, std::uint64_t stream) noexcept {
    Engine e(0);
    e.state_ = mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ull));
    return e;
  }

  std::uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0,1), 53 bits.
  double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1]; safe as a log() argument.
  double next_open() noexcept { return 1.0 - next_unit(); }

 private:
  std::uint64_t state_;
};

inline double standard_normal(Engine& eng) {
  // Box-Muller, cosine branch.
  const double u = eng.next_open();
  const double v = eng.next_unit();
  return std::sqrt(-2.0 * std::log(u)) *
         std::cos(6.28318530717958647692528676655900577 * v);
}

inline double exponential(Engine& eng, double rate) {
  return -std::log(eng.next_open()) / rate;
}

inline long long poisson(Engine& eng, double mu) {
  long long total = 0;
  // Split large means by additivity so exp(-mu) stays representable.
  while (mu > 50.0) {
    mu -= 50.0;
    const double limit = std::exp(-50.0);
    double prod = eng.next_unit();
    while (prod > limit) {
      prod *= eng.next_unit();
      ++total;
    }
  }
  const double limit = std::exp(-mu);
  double prod = eng.next_unit();
  while (prod > limit) {
    prod *= eng.next_unit();
    ++total;
  }
  return total;
}

// Marsaglia-Tsang squeeze method.
inline double gamma(Engine& eng, double shape, double rate) {
  if (shape < 1.0) {
    const double boost = std::pow(eng.next_open(), 1.0 / shape);
    return gamma(eng, shape + 1.0, rate) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = standard_normal(eng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = eng.next_unit();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

inline double rademacher(Engine& eng, double a) {
  return (eng.next_u64() >> 63) ? a : -a;
}

}  // namespace penselect::rng

#endif  // PENSELECT_RNG_HPP
