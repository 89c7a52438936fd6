#include "dtmm/marginal.hpp"

#include <cmath>
#include <stdexcept>

#include "dtmm/kernels.hpp"
#include "dtmm/special.hpp"

namespace dtmm {

std::vector<NodeStat> node_stats(const PhyloTree& tree,
                                 std::span<const std::int64_t> counts) {
  auto y = aggregate_counts(tree, counts);
  std::vector<NodeStat> out(tree.num_internal());
  for (int k = 0; k < tree.num_internal(); ++k) {
    int v = tree.internal_node(k);
    out[k] = {y[tree.left_child(v)], y[v]};
  }
  return out;
}

double log_beta_binomial(std::int64_t y_left, std::int64_t y_total,
                         double theta, double tau) {
  if (y_left < 0 || y_left > y_total)
    throw std::invalid_argument("log_beta_binomial: need 0 <= y_left <= y_total");
  if (!(theta > 0 && theta < 1) || !(tau > 0))
    throw std::invalid_argument("log_beta_binomial: need theta in (0,1), tau > 0");
  if (y_total == 0) return 0.0;
  const double a = theta * tau, b = (1.0 - theta) * tau;
  const std::int64_t y_right = y_total - y_left;
  return log_choose(y_total, y_left) + log_beta(a + y_left, b + y_right) -
         log_beta(a, b);
}

std::vector<double> grid_row(const NodeStat& stat, const QuadGrid& grid) {
  std::vector<double> row(grid.n_cells(), 0.0);
  if (stat.y_total == 0) return row;
  if (stat.y_left < 0 || stat.y_left > stat.y_total)
    throw std::invalid_argument("grid_row: invalid node stat");
  const double lc = log_choose(stat.y_total, stat.y_left);
  const std::int64_t yr = stat.y_total - stat.y_left;
  const int n_tau = grid.n_tau();
  for (int it = 0; it < grid.n_theta(); ++it) {
    const double th = grid.theta[it];
    for (int iu = 0; iu < n_tau; ++iu) {
      const double a = th * grid.tau[iu], b = (1.0 - th) * grid.tau[iu];
      row[static_cast<std::size_t>(it) * n_tau + iu] =
          lc + log_beta(a + stat.y_left, b + yr) - log_beta(a, b);
    }
  }
  return row;
}

std::span<const double> GridRowCache::row(const NodeStat& stat) {
  std::uint64_t key = (static_cast<std::uint64_t>(stat.y_total) << 32) |
                      static_cast<std::uint64_t>(stat.y_left);
  auto it = index_.find(key);
  if (it == index_.end()) {
    rows_.push_back(grid_row(stat, *grid_));
    it = index_.emplace(key, rows_.size() - 1).first;
  }
  return rows_[it->second];
}

GridRowTable::GridRowTable(const std::vector<std::vector<NodeStat>>& stats,
                           const QuadGrid& grid, int threads,
                           GridRowCache* cache) {
  n_samples_ = static_cast<int>(stats.size());
  n_nodes_ = n_samples_ ? static_cast<int>(stats[0].size()) : 0;
  n_cells_ = grid.n_cells();
  rowptr_.assign(static_cast<std::size_t>(n_samples_) * n_nodes_, nullptr);
  if (cache) {
    // Rows live in the cache; repeated (y_left, y_total) pairs are shared.
    for (int i = 0; i < n_samples_; ++i)
      for (int k = 0; k < n_nodes_; ++k)
        rowptr_[static_cast<std::size_t>(i) * n_nodes_ + k] =
            cache->row(stats[i][k]).data();
    return;
  }
  storage_.resize(static_cast<std::size_t>(n_samples_) * n_nodes_ * n_cells_);
  kernels::build_grid_rows(stats, grid, storage_, threads);
  for (int i = 0; i < n_samples_; ++i)
    for (int k = 0; k < n_nodes_; ++k)
      rowptr_[static_cast<std::size_t>(i) * n_nodes_ + k] =
          storage_.data() +
          (static_cast<std::size_t>(i) * n_nodes_ + k) * n_cells_;
}

double log_marginal_cells(std::span<const double> cells,
                          const QuadGrid& grid) {
  return kernels::lse_weighted(cells, grid.log_wcell());
}

double log_marginal_cells_plus(std::span<const double> cells,
                               std::span<const double> extra,
                               const QuadGrid& grid) {
  return kernels::lse_weighted_plus(cells, extra, grid.log_wcell());
}

double log_marginal_active(std::span<const NodeStat> stats,
                           const QuadGrid& grid) {
  std::vector<double> cells(grid.n_cells(), 0.0);
  for (const auto& s : stats) {
    auto row = grid_row(s, grid);
    for (int g = 0; g < grid.n_cells(); ++g) cells[g] += row[g];
  }
  return log_marginal_cells(cells, grid);
}

double log_marginal_inactive_integrated(std::span<const NodeStat> stats,
                                        const QuadGrid& grid) {
  // Same integrand as the active marginal: the shared parameters carry the
  // same base prior, only the sample set differs (the full data).
  return log_marginal_active(stats, grid);
}

double log_marginal_inactive(std::span<const NodeStat> stats, double theta,
                             double tau) {
  double out = 0.0;
  for (const auto& s : stats)
    out += log_beta_binomial(s.y_left, s.y_total, theta, tau);
  return out;
}

AccumulatorSet::AccumulatorSet(int n_samples, int n_nodes,
                               const QuadGrid& grid)
    : grid_(&grid),
      n_nodes_(n_nodes),
      n_cells_(grid.n_cells()),
      cluster_of_(n_samples, -1) {}

void AccumulatorSet::add(int sample, int c, const GridRowTable& rows) {
  if (cluster_of_[sample] >= 0)
    throw std::logic_error("AccumulatorSet: sample already assigned");
  if (c < 0 || c > n_clusters())
    throw std::out_of_range("AccumulatorSet: bad cluster id");
  if (c == n_clusters()) {
    size_.push_back(0);
    cells_.emplace_back(static_cast<std::size_t>(n_nodes_) * n_cells_, 0.0);
    l1_cache_.emplace_back(n_nodes_, 0.0);
    l1_valid_.emplace_back(n_nodes_, 0);
  }
  cluster_of_[sample] = c;
  ++size_[c];
  double* base = cells_[c].data();
  for (int k = 0; k < n_nodes_; ++k) {
    auto row = rows.row(sample, k);
    double* cell = base + static_cast<std::size_t>(k) * n_cells_;
    for (int g = 0; g < n_cells_; ++g) cell[g] += row[g];
    l1_valid_[c][k] = 0;
  }
}

int AccumulatorSet::remove(int sample, const GridRowTable& rows) {
  int c = cluster_of_[sample];
  if (c < 0) throw std::logic_error("AccumulatorSet: sample not assigned");
  cluster_of_[sample] = -1;
  --size_[c];
  if (size_[c] == 0) {
    int last = n_clusters() - 1;
    if (c != last) {
      cells_[c] = std::move(cells_[last]);
      size_[c] = size_[last];
      l1_cache_[c] = std::move(l1_cache_[last]);
      l1_valid_[c] = std::move(l1_valid_[last]);
      for (int& cl : cluster_of_)
        if (cl == last) cl = c;
    }
    cells_.pop_back();
    size_.pop_back();
    l1_cache_.pop_back();
    l1_valid_.pop_back();
    return c;
  }
  double* base = cells_[c].data();
  for (int k = 0; k < n_nodes_; ++k) {
    auto row = rows.row(sample, k);
    double* cell = base + static_cast<std::size_t>(k) * n_cells_;
    for (int g = 0; g < n_cells_; ++g) cell[g] -= row[g];
    l1_valid_[c][k] = 0;
  }
  return c;
}

double AccumulatorSet::log_l1(int c, int node, const GridRowTable&) {
  if (!l1_valid_[c][node]) {
    l1_cache_[c][node] = log_marginal_cells(cells(c, node), *grid_);
    l1_valid_[c][node] = 1;
  }
  return l1_cache_[c][node];
}

void AccumulatorSet::canonicalize() {
  std::vector<int> relabel(n_clusters(), -1);
  int next = 0;
  for (int c : cluster_of_) {
    if (c < 0) throw std::logic_error("AccumulatorSet: unassigned sample");
    if (relabel[c] < 0) relabel[c] = next++;
  }
  std::vector<std::vector<double>> cells(n_clusters());
  std::vector<int> size(n_clusters());
  std::vector<std::vector<double>> l1_cache(n_clusters());
  std::vector<std::vector<char>> l1_valid(n_clusters());
  for (int c = 0; c < n_clusters(); ++c) {
    cells[relabel[c]] = std::move(cells_[c]);
    size[relabel[c]] = size_[c];
    l1_cache[relabel[c]] = std::move(l1_cache_[c]);
    l1_valid[relabel[c]] = std::move(l1_valid_[c]);
  }
  cells_ = std::move(cells);
  size_ = std::move(size);
  l1_cache_ = std::move(l1_cache);
  l1_valid_ = std::move(l1_valid);
  for (int& c : cluster_of_) c = relabel[c];
}

std::vector<int> AccumulatorSet::compact_labels() const {
  std::vector<int> relabel(n_clusters(), -1);
  std::vector<int> out(cluster_of_.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < cluster_of_.size(); ++i) {
    int c = cluster_of_[i];
    if (c < 0) throw std::logic_error("AccumulatorSet: unassigned sample");
    if (relabel[c] < 0) relabel[c] = next++;
    out[i] = relabel[c];
  }
  return out;
}

}  // namespace dtmm
