#ifndef VARSIM_RANDOM_HPP
#define VARSIM_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace varsim {

// Seeded random source with portable variate generation.
//
// std::mt19937_64 has a fully specified output sequence, but the standard
// distributions do not, so every transform below is written out. Traces are
// then bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer on [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Exponential variate with the given rate (mean 1/rate).
  double exponential(double rate) { return -std::log(uniform_open_zero()) / rate; }

  // Standard normal via Box-Muller; the second variate is discarded so the
  // stream position depends only on the number of calls.
  double normal() {
    const double u1 = uniform_open_zero();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Mean-one lognormal multiplier whose relative standard deviation is
  // sigma_rel.
  double lognormal_multiplier(double sigma_rel) {
    if (sigma_rel <= 0.0) return 1.0;
    const double s2 = std::log1p(sigma_rel * sigma_rel);
    return std::exp(std::sqrt(s2) * normal() - 0.5 * s2);
  }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; derives independent sub-stream seeds from a scenario
// seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace varsim

#endif  // VARSIM_RANDOM_HPP
