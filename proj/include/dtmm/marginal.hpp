#ifndef DTMM_MARGINAL_HPP
#define DTMM_MARGINAL_HPP

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "dtmm/quadrature.hpp"
#include "dtmm/tree.hpp"

namespace dtmm {

// Sufficient statistics of one sample at one internal node: the count mass
// of the left child and of the node itself.
struct NodeStat {
  std::int64_t y_left = 0;
  std::int64_t y_total = 0;
};

// Per-node stats of one sample, canonical node order.
std::vector<NodeStat> node_stats(const PhyloTree& tree,
                                 std::span<const std::int64_t> counts);

// log of the beta-binomial pmf: C(y,y_l) B(theta*tau+y_l, (1-theta)*tau+y_r)
// / B(theta*tau, (1-theta)*tau).
double log_beta_binomial(std::int64_t y_left, std::int64_t y_total,
                         double theta, double tau);

// Log beta-binomial of one stat evaluated over every grid cell
// (theta-major, flat index it * n_tau + iu).
std::vector<double> grid_row(const NodeStat& stat, const QuadGrid& grid);

// Memoizes grid rows by (y_left, y_total); useful when many samples share
// small counts or data are regenerated repeatedly.
class GridRowCache {
 public:
  explicit GridRowCache(const QuadGrid& grid) : grid_(&grid) {}
  std::span<const double> row(const NodeStat& stat);

 private:
  const QuadGrid* grid_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  std::vector<std::vector<double>> rows_;
};

// All grid rows of a dataset, indexed by (sample, node).
class GridRowTable {
 public:
  GridRowTable() = default;
  GridRowTable(const std::vector<std::vector<NodeStat>>& stats,
               const QuadGrid& grid, int threads = 0,
               GridRowCache* cache = nullptr);

  int n_samples() const { return n_samples_; }
  int n_nodes() const { return n_nodes_; }
  int n_cells() const { return n_cells_; }
  std::span<const double> row(int sample, int node) const {
    return {rowptr_[static_cast<std::size_t>(sample) * n_nodes_ + node],
            static_cast<std::size_t>(n_cells_)};
  }

 private:
  int n_samples_ = 0, n_nodes_ = 0, n_cells_ = 0;
  std::vector<double> storage_;
  std::vector<const double*> rowptr_;
};

// log integral over the (theta, tau) prior grid of the product of
// beta-binomial factors whose per-cell log sums are `cells`.
double log_marginal_cells(std::span<const double> cells, const QuadGrid& grid);

// Same, with one extra sample's row added on the fly.
double log_marginal_cells_plus(std::span<const double> cells,
                               std::span<const double> extra,
                               const QuadGrid& grid);

// Marginal likelihood of a set of stats at one node with the node parameters
// integrated out over the prior grid (the active-node marginal; applied to
// the full data set it is also the integrated inactive-node marginal).
double log_marginal_active(std::span<const NodeStat> stats,
                           const QuadGrid& grid);
double log_marginal_inactive_integrated(std::span<const NodeStat> stats,
                                        const QuadGrid& grid);

// Product of beta-binomial factors at fixed shared parameters.
double log_marginal_inactive(std::span<const NodeStat> stats, double theta,
                             double tau);

// Per-cluster, per-node accumulated grid sums with membership tracking.
// Adding/removing a sample touches every node's cells once; marginals are
// then log-sum-exp reductions over the grid, so a label move costs O(grid).
class AccumulatorSet {
 public:
  AccumulatorSet(int n_samples, int n_nodes, const QuadGrid& grid);

  int n_clusters() const { return static_cast<int>(size_.size()); }
  int cluster_size(int c) const { return size_[c]; }
  int cluster_of(int sample) const { return cluster_of_[sample]; }
  std::span<const double> cells(int c, int node) const {
    return {cells_[c].data() + static_cast<std::size_t>(node) * n_cells_,
            static_cast<std::size_t>(n_cells_)};
  }

  // Adds `sample` to cluster c (c == n_clusters() opens a new cluster).
  void add(int sample, int c, const GridRowTable& rows);
  // Removes `sample` from its cluster; empty clusters are deleted (the last
  // cluster id is swapped into the vacated slot). Returns the old cluster.
  int remove(int sample, const GridRowTable& rows);

  // Cached log_marginal_cells per (cluster, node); invalidated by add/remove.
  double log_l1(int c, int node, const GridRowTable& rows);

  // Current labels, relabeled contiguously by order of first appearance.
  std::vector<int> compact_labels() const;

  // Reorders internal cluster ids to first-appearance order so that the
  // enumeration order (and hence RNG consumption in the sampler) is a pure
  // function of the labeling, not of the move history.
  void canonicalize();

 private:
  const QuadGrid* grid_;
  int n_nodes_, n_cells_;
  std::vector<int> cluster_of_;
  std::vector<int> size_;
  std::vector<std::vector<double>> cells_;
  std::vector<std::vector<double>> l1_cache_;
  std::vector<std::vector<char>> l1_valid_;
};

}  // namespace dtmm

#endif  // DTMM_MARGINAL_HPP
