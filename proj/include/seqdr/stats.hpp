#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace seqdr {

// Standard normal quantile, Wichura's AS 241 (PPND16). Absolute error is
// below 1e-15 over (0,1), well inside the 1e-8 budget used for critical
// values.
double normal_quantile(double p);

// Critical value z_{(1+level)/2} for a two-sided interval.
inline double normal_critical(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("confidence level must be in (0,1)");
  return normal_quantile(0.5 * (1.0 + level));
}

// One splitmix64 step; also used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Seed for stream `index` derived from a base seed. Replication r of a study
// uses derive_seed(base_seed, r), so inserting or removing estimators can
// never shift the data stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

// Deterministic RNG: mt19937_64 engine (bit-exact by the standard) with
// hand-rolled uniform/normal transforms, so draws do not depend on the
// standard library's unspecified distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0,1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1), safe as a quantile argument.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_quantile(uniform_open()); }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, bound) by rejection; used by Fisher-Yates.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace seqdr
