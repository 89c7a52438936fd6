// Times the OpenMP kernels against their serial reference implementations.
// Usage: bench_kernels [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "dtmm/kernels.hpp"
#include "dtmm/marginal.hpp"
#include "dtmm/rng.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : 0;
  const int resolved = dtmm::kernels::resolve_threads(threads);
  std::printf("threads: serial reference vs %d-thread kernels\n", resolved);

  auto rng = dtmm::make_rng(12345);

  // Grid-row construction: 400 samples x 63 nodes on the default grid.
  auto grid = dtmm::QuadGrid::make(0.5, 1.0, 64);
  const int n = 400, nodes = 63;
  std::vector<std::vector<dtmm::NodeStat>> stats(
      n, std::vector<dtmm::NodeStat>(nodes));
  for (auto& per_sample : stats)
    for (auto& s : per_sample) {
      s.y_total = 1 + static_cast<std::int64_t>(dtmm::runif(rng) * 2000);
      s.y_left = static_cast<std::int64_t>(dtmm::runif(rng) * s.y_total);
    }
  std::vector<double> storage(static_cast<std::size_t>(n) * nodes *
                              grid.n_cells());
  double t_serial = time_best_of(3, [&] {
    dtmm::kernels::serial::build_grid_rows(stats, grid, storage);
  });
  double t_par = time_best_of(3, [&] {
    dtmm::kernels::build_grid_rows(stats, grid, storage, threads);
  });
  std::printf("build_grid_rows      serial %8.3fs  parallel %8.3fs  speedup %.2fx\n",
              t_serial, t_par, t_serial / t_par);

  // Co-clustering counts: 1000 draws of 400 labels.
  std::vector<std::vector<int>> draws(1000, std::vector<int>(n));
  for (auto& d : draws)
    for (auto& v : d) v = static_cast<int>(dtmm::runif(rng) * 6);
  std::vector<double> counts(static_cast<std::size_t>(n) * n, 0.0);
  t_serial = time_best_of(3, [&] {
    std::fill(counts.begin(), counts.end(), 0.0);
    dtmm::kernels::serial::coclustering_counts(draws, n, counts);
  });
  t_par = time_best_of(3, [&] {
    std::fill(counts.begin(), counts.end(), 0.0);
    dtmm::kernels::coclustering_counts(draws, n, counts, threads);
  });
  std::printf("coclustering_counts  serial %8.3fs  parallel %8.3fs  speedup %.2fx\n",
              t_serial, t_par, t_serial / t_par);

  // Association losses against the averaged matrix.
  for (double& v : counts) v /= draws.size();
  t_serial = time_best_of(3, [&] {
    dtmm::kernels::serial::association_losses(draws, counts, n);
  });
  t_par = time_best_of(3, [&] {
    dtmm::kernels::association_losses(draws, counts, n, threads);
  });
  std::printf("association_losses   serial %8.3fs  parallel %8.3fs  speedup %.2fx\n",
              t_serial, t_par, t_serial / t_par);
  return 0;
}
