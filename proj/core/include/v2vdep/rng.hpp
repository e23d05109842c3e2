#pragma once

#include <cmath>
#include <cstdint>

namespace v2vdep {

// Counter-based pseudo random generator built on the splitmix64 finalizer.
// Every stream is identified by a (seed, stream, substream) key, so Monte
// Carlo trials can draw from independent streams keyed by trial index and
// purpose tag. Results are identical regardless of how trials are scheduled
// across threads.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0)
      : state_(derive_key(seed, stream, substream)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Unit-mean exponential (Rayleigh fading power gain).
  double next_exponential() { return -std::log1p(-next_double()); }

  // Poisson count by Knuth's product-of-uniforms method. Means above the
  // chunk size are split into independent Poisson increments so that
  // exp(-mean) never underflows.
  std::uint64_t next_poisson(double mean) {
    std::uint64_t total = 0;
    constexpr double chunk = 500.0;
    while (mean > chunk) {
      total += poisson_small(chunk);
      mean -= chunk;
    }
    return total + poisson_small(mean);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t substream) {
    std::uint64_t k = mix(seed + 0x9e3779b97f4a7c15ull);
    k = mix(k ^ (stream + 0xbf58476d1ce4e5b9ull));
    k = mix(k ^ (substream + 0x94d049bb133111ebull));
    return k;
  }

  std::uint64_t poisson_small(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    std::uint64_t n = 0;
    double product = next_double();
    while (product >= limit) {
      ++n;
      product *= next_double();
    }
    return n;
  }

  std::uint64_t state_;
};

}  // namespace v2vdep
