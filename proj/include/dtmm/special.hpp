#ifndef DTMM_SPECIAL_HPP
#define DTMM_SPECIAL_HPP

#include <cmath>
#include <cstdint>
#include <span>

namespace dtmm {

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

inline double log_sum_exp(std::span<const double> v) {
  double mx = -HUGE_VAL;
  for (double x : v) mx = std::max(mx, x);
  if (!(mx > -HUGE_VAL)) return -HUGE_VAL;
  double s = 0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// log(exp(a) + exp(b))
inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -HUGE_VAL) return a;
  return a + std::log1p(std::exp(b - a));
}

// Numerically stable log(1/(1+exp(-x))).
inline double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double digamma(double x);
double trigamma(double x);

}  // namespace dtmm

#endif  // DTMM_SPECIAL_HPP
