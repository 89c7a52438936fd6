#include "dtmm/kernels.hpp"

#include <cmath>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dtmm/marginal.hpp"

namespace dtmm::kernels {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DTMM_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {
constexpr double kLseCutoff = 45.0;
}

double lse_weighted(std::span<const double> cells,
                    std::span<const double> logw) {
  const std::size_t n = cells.size();
  double mx = -HUGE_VAL;
  for (std::size_t g = 0; g < n; ++g) {
    double v = cells[g] + logw[g];
    if (v > mx) mx = v;
  }
  if (!(mx > -HUGE_VAL)) return -HUGE_VAL;
  double s = 0.0;
  for (std::size_t g = 0; g < n; ++g) {
    double v = cells[g] + logw[g] - mx;
    if (v > -kLseCutoff) s += std::exp(v);
  }
  return mx + std::log(s);
}

double lse_weighted_plus(std::span<const double> cells,
                         std::span<const double> extra,
                         std::span<const double> logw) {
  const std::size_t n = cells.size();
  double mx = -HUGE_VAL;
  for (std::size_t g = 0; g < n; ++g) {
    double v = cells[g] + extra[g] + logw[g];
    if (v > mx) mx = v;
  }
  if (!(mx > -HUGE_VAL)) return -HUGE_VAL;
  double s = 0.0;
  for (std::size_t g = 0; g < n; ++g) {
    double v = cells[g] + extra[g] + logw[g] - mx;
    if (v > -kLseCutoff) s += std::exp(v);
  }
  return mx + std::log(s);
}

namespace serial {

void build_grid_rows(const std::vector<std::vector<NodeStat>>& stats,
                     const QuadGrid& grid, std::vector<double>& storage) {
  const int n = static_cast<int>(stats.size());
  const int nodes = n ? static_cast<int>(stats[0].size()) : 0;
  const std::size_t cells = grid.n_cells();
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < nodes; ++k) {
      auto row = grid_row(stats[i][k], grid);
      std::copy(row.begin(), row.end(),
                storage.begin() +
                    (static_cast<std::size_t>(i) * nodes + k) * cells);
    }
}

void coclustering_counts(const std::vector<std::vector<int>>& draws, int n,
                         std::vector<double>& out) {
  for (const auto& g : draws)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (g[i] == g[j]) out[static_cast<std::size_t>(i) * n + j] += 1.0;
}

std::vector<double> association_losses(
    const std::vector<std::vector<int>>& draws, std::span<const double> pi_hat,
    int n) {
  std::vector<double> losses(draws.size());
  for (std::size_t t = 0; t < draws.size(); ++t) {
    const auto& g = draws[t];
    double loss = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double gamma = g[i] == g[j] ? 1.0 : 0.0;
        double d = gamma - pi_hat[static_cast<std::size_t>(i) * n + j];
        loss += d * d;
      }
    losses[t] = loss;
  }
  return losses;
}

}  // namespace serial

void build_grid_rows(const std::vector<std::vector<NodeStat>>& stats,
                     const QuadGrid& grid, std::vector<double>& storage,
                     int threads) {
  const int t = resolve_threads(threads);
  if (t == 1) {
    serial::build_grid_rows(stats, grid, storage);
    return;
  }
  const int n = static_cast<int>(stats.size());
  const int nodes = n ? static_cast<int>(stats[0].size()) : 0;
  const std::size_t cells = grid.n_cells();
#ifdef _OPENMP
#pragma omp parallel for num_threads(t) schedule(dynamic) collapse(2)
#endif
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < nodes; ++k) {
      auto row = grid_row(stats[i][k], grid);
      std::copy(row.begin(), row.end(),
                storage.begin() +
                    (static_cast<std::size_t>(i) * nodes + k) * cells);
    }
}

void coclustering_counts(const std::vector<std::vector<int>>& draws, int n,
                         std::vector<double>& out, int threads) {
  const int t = resolve_threads(threads);
  if (t == 1) {
    serial::coclustering_counts(draws, n, out);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for num_threads(t) schedule(static)
#endif
  for (int i = 0; i < n; ++i) {
    double* row_out = out.data() + static_cast<std::size_t>(i) * n;
    for (const auto& g : draws) {
      const int gi = g[i];
      for (int j = 0; j < n; ++j)
        if (gi == g[j]) row_out[j] += 1.0;
    }
  }
}

std::vector<double> association_losses(
    const std::vector<std::vector<int>>& draws, std::span<const double> pi_hat,
    int n, int threads) {
  const int t = resolve_threads(threads);
  if (t == 1) return serial::association_losses(draws, pi_hat, n);
  std::vector<double> losses(draws.size());
#ifdef _OPENMP
#pragma omp parallel for num_threads(t) schedule(static)
#endif
  for (std::size_t idx = 0; idx < draws.size(); ++idx) {
    const auto& g = draws[idx];
    double loss = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double gamma = g[i] == g[j] ? 1.0 : 0.0;
        double d = gamma - pi_hat[static_cast<std::size_t>(i) * n + j];
        loss += d * d;
      }
    losses[idx] = loss;
  }
  return losses;
}

}  // namespace dtmm::kernels
