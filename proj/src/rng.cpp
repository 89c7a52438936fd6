#include "dtmm/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dtmm {

int categorical_from_log_weights(std::span<const double> log_w, Rng& rng) {
  if (log_w.empty())
    throw std::invalid_argument("categorical: empty weight vector");
  double mx = log_w[0];
  for (double v : log_w) mx = std::max(mx, v);
  double total = 0;
  for (double v : log_w) total += std::exp(v - mx);
  double u = runif(rng) * total;
  double acc = 0;
  for (size_t i = 0; i < log_w.size(); ++i) {
    acc += std::exp(log_w[i] - mx);
    if (u <= acc) return static_cast<int>(i);
  }
  return static_cast<int>(log_w.size()) - 1;
}

std::vector<std::int64_t> rmultinom(std::int64_t n, std::span<const double> p,
                                    Rng& rng) {
  std::vector<std::int64_t> out(p.size(), 0);
  double remaining_mass = 0;
  for (double v : p) remaining_mass += v;
  std::int64_t remaining = n;
  for (size_t j = 0; j + 1 < p.size() && remaining > 0; ++j) {
    double q = remaining_mass > 0 ? p[j] / remaining_mass : 0.0;
    q = std::min(1.0, std::max(0.0, q));
    std::int64_t draw =
        std::binomial_distribution<std::int64_t>(remaining, q)(rng);
    out[j] = draw;
    remaining -= draw;
    remaining_mass -= p[j];
  }
  if (!p.empty()) out[p.size() - 1] += remaining;
  return out;
}

std::int64_t rnegbinom(double m, double s, Rng& rng) {
  if (m <= 0 || s <= 0)
    throw std::invalid_argument("rnegbinom: parameters must be positive");
  double lambda = rgamma(s, m / s, rng);
  return std::poisson_distribution<std::int64_t>(lambda)(rng);
}

}  // namespace dtmm
