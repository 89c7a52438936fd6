#ifndef DTMM_KERNELS_HPP
#define DTMM_KERNELS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "dtmm/quadrature.hpp"

namespace dtmm {

struct NodeStat;

// Data-parallel inner loops of the fit and summary paths. Each kernel has a
// serial reference implementation under kernels::serial used by the tests
// and the benchmark; the unsuffixed entry points dispatch to OpenMP when
// more than one thread is requested. threads == 0 means the runtime default
// (DTMM_THREADS env var, else the OpenMP maximum).
namespace kernels {

int resolve_threads(int requested);

// log sum_g exp(cells[g] + logw[g]); contributions below the running
// maximum by more than 45 nats are skipped (< 3e-20 relative).
double lse_weighted(std::span<const double> cells,
                    std::span<const double> logw);

// Same with an extra per-cell offset added on the fly.
double lse_weighted_plus(std::span<const double> cells,
                         std::span<const double> extra,
                         std::span<const double> logw);

// Fills storage with grid rows for all (sample, node) stats, row-major.
void build_grid_rows(const std::vector<std::vector<NodeStat>>& stats,
                     const QuadGrid& grid, std::vector<double>& storage,
                     int threads = 0);

// Adds the n x n co-association counts of one or more label draws:
// out[i*n+j] += 1 whenever labels[i] == labels[j] in a draw.
void coclustering_counts(const std::vector<std::vector<int>>& draws, int n,
                         std::vector<double>& out, int threads = 0);

// Frobenius loss of each draw's association matrix against pi_hat.
std::vector<double> association_losses(const std::vector<std::vector<int>>& draws,
                                       std::span<const double> pi_hat, int n,
                                       int threads = 0);

namespace serial {
void build_grid_rows(const std::vector<std::vector<NodeStat>>& stats,
                     const QuadGrid& grid, std::vector<double>& storage);
void coclustering_counts(const std::vector<std::vector<int>>& draws, int n,
                         std::vector<double>& out);
std::vector<double> association_losses(const std::vector<std::vector<int>>& draws,
                                       std::span<const double> pi_hat, int n);
}  // namespace serial

}  // namespace kernels
}  // namespace dtmm

#endif  // DTMM_KERNELS_HPP
