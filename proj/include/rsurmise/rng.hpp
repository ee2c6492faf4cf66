#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace rsurmise {

namespace detail {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based 64-bit generator. Draw i of stream (seed, stream) is
/// mix64(key(seed, stream) + (i + 1) * golden), so every draw is a pure
/// function of (seed, stream, index) and independent of scheduling.
/// Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream),
        key_(detail::mix64(seed ^ detail::mix64(stream + detail::kGolden))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Independent child stream, e.g. one per realization.
  RngStream split(std::uint64_t child) const {
    return RngStream(detail::mix64(seed_ + detail::kGolden * (stream_ + 1)), child);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Draw from N(mu, sigma) by Box-Muller. Consumes exactly two words.
inline double sample_gaussian(RngStream& rng, double mu, double sigma) {
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  if (sigma == 0.0) return mu;
  return mu + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double sample_uniform(RngStream& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

/// Chi-distributed draw with k >= 0 (possibly fractional) degrees of freedom,
/// as sqrt of Gamma(k/2, scale 2). k = 0 yields 0.
inline double sample_chi(RngStream& rng, double k) {
  if (!(k > 0.0)) return 0.0;
  std::gamma_distribution<double> gamma(0.5 * k, 2.0);
  return std::sqrt(gamma(rng));
}

}  // namespace rsurmise
