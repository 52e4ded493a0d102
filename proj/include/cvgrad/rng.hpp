#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "cvgrad/errors.hpp"

namespace cvgrad {

// Deterministic random stream. The raw 64-bit source is std::mt19937_64,
// whose output sequence is fixed by the C++ standard, so streams are
// bit-identical across platforms and can be reproduced in any language
// with a Mersenne Twister (mt19937-64) implementation. Mappings:
//
//   uniform()            (u >> 11) * 2^-53, one u64 draw, in [0, 1)
//   normal()             basic Box-Muller on two uniforms u1 in (0,1],
//                        u2 in [0,1): z0 = sqrt(-2 ln u1) cos(2 pi u2),
//                        z1 = ... sin(...); z1 is cached and returned
//                        by the next call (no extra draws)
//   uniform_index(n)     rejection sampling on u64 % n (bias-free)
//
// Seeds are 64-bit. derive() produces an independent child seed by
// splitmix64-mixing (seed ^ tag), used to give experiments and sub-tasks
// their own streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Log-uniform on [lo, hi], lo > 0.
  double log_uniform(double lo, double hi) {
    if (!(lo > 0.0) || !(hi >= lo)) throw ArgumentError("log_uniform: need 0 < lo <= hi");
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double std) { return mean + std * normal(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw ArgumentError("uniform_index: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t u;
    do {
      u = next_u64();
    } while (u >= limit);
    return u % n;
  }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed ^ (tag + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace cvgrad
