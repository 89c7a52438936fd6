#ifndef DTMM_RNG_HPP
#define DTMM_RNG_HPP

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace dtmm {

using Rng = std::mt19937_64;

// Derives an independent stream for a sub-task (chain, replicate, block).
// Deterministic in (seed, stream), regardless of thread scheduling.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
  return Rng(seq);
}

inline double runif(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double rgamma(double shape, double scale, Rng& rng) {
  return std::gamma_distribution<double>(shape, scale)(rng);
}

// Clamped into the open interval: at small shapes the gamma pair can round
// to 0 or 1, which downstream beta shapes must never see.
inline double rbeta(double a, double b, Rng& rng) {
  double x = rgamma(a, 1.0, rng);
  double y = rgamma(b, 1.0, rng);
  if (x + y <= 0) return a / (a + b);
  double v = x / (x + y);
  return std::min(std::max(v, 1e-300), 1.0 - 1e-16);
}

inline double rnorm(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

// Index draw from unnormalized log weights (log-sum-exp normalization).
int categorical_from_log_weights(std::span<const double> log_w, Rng& rng);

// Multinomial counts via sequential conditional binomials.
std::vector<std::int64_t> rmultinom(std::int64_t n, std::span<const double> p,
                                    Rng& rng);

// Negative binomial with mean m and dispersion s (variance m + m^2/s),
// drawn as a gamma-Poisson mixture.
std::int64_t rnegbinom(double m, double s, Rng& rng);

}  // namespace dtmm

#endif  // DTMM_RNG_HPP
