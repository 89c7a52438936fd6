#include "dtmm/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dtmm/kernels.hpp"

namespace dtmm {

CoClusteringMatrix coclustering(const PosteriorChain& chain, int threads) {
  if (chain.draws.empty())
    throw std::invalid_argument("coclustering: empty chain");
  const int n = static_cast<int>(chain.draws.front().g.size());
  std::vector<std::vector<int>> draws;
  draws.reserve(chain.draws.size());
  for (const auto& d : chain.draws) draws.push_back(d.g);

  CoClusteringMatrix out;
  out.n = n;
  out.values.assign(static_cast<std::size_t>(n) * n, 0.0);
  kernels::coclustering_counts(draws, n, out.values, threads);
  const double scale = 1.0 / static_cast<double>(draws.size());
  for (double& v : out.values) v *= scale;
  return out;
}

std::pair<std::vector<int>, int> least_squares_clustering(
    const PosteriorChain& chain, const CoClusteringMatrix& pi_hat,
    int threads) {
  if (chain.draws.empty())
    throw std::invalid_argument("least_squares_clustering: empty chain");
  std::vector<std::vector<int>> draws;
  draws.reserve(chain.draws.size());
  for (const auto& d : chain.draws) draws.push_back(d.g);
  auto losses =
      kernels::association_losses(draws, pi_hat.values, pi_hat.n, threads);
  std::size_t best = 0;
  for (std::size_t t = 1; t < losses.size(); ++t)
    if (losses[t] < losses[best]) best = t;
  return {chain.draws[best].g, chain.draws[best].t};
}

std::vector<double> activation_means(const PosteriorChain& chain) {
  if (chain.draws.empty())
    throw std::invalid_argument("activation_means: empty chain");
  std::vector<double> mean(chain.draws.front().s.size(), 0.0);
  for (const auto& d : chain.draws)
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += d.s[k] ? 1.0 : 0.0;
  for (double& v : mean) v /= static_cast<double>(chain.draws.size());
  return mean;
}

namespace {

// Posterior mean of theta and the tau marginal for one accumulated cell
// matrix under the grid prior.
void posterior_moments(std::span<const double> cells, const QuadGrid& grid,
                       double* theta_mean, std::vector<double>* tau_marginal) {
  const auto& logw = grid.log_wcell();
  double mx = -HUGE_VAL;
  for (int g = 0; g < grid.n_cells(); ++g)
    mx = std::max(mx, cells[g] + logw[g]);
  double z = 0, zt = 0;
  std::vector<double> tz(grid.n_tau(), 0.0);
  for (int it = 0; it < grid.n_theta(); ++it)
    for (int iu = 0; iu < grid.n_tau(); ++iu) {
      int g = it * grid.n_tau() + iu;
      double w = std::exp(cells[g] + logw[g] - mx);
      z += w;
      zt += w * grid.theta[it];
      tz[iu] += w;
    }
  *theta_mean = zt / z;
  if (tau_marginal) {
    for (double& v : tz) v /= z;
    *tau_marginal = std::move(tz);
  }
}

}  // namespace

CentroidEstimate centroids(const OtuTable& data, const PhyloTree& tree,
                           std::span<const int> c_rep,
                           std::span<const std::uint8_t> gamma_rep,
                           const QuadGrid& grid) {
  const int n = data.n_samples();
  const int n_nodes = tree.num_internal();
  if (static_cast<int>(c_rep.size()) != n ||
      static_cast<int>(gamma_rep.size()) != n_nodes)
    throw std::invalid_argument("centroids: dimension mismatch");

  CentroidEstimate out;
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) {
    auto it = std::find(out.cluster_labels.begin(), out.cluster_labels.end(),
                        c_rep[i]);
    if (it == out.cluster_labels.end()) {
      out.cluster_labels.push_back(c_rep[i]);
      idx[i] = static_cast<int>(out.cluster_labels.size()) - 1;
    } else {
      idx[i] = static_cast<int>(it - out.cluster_labels.begin());
    }
  }
  const int kc = static_cast<int>(out.cluster_labels.size());

  std::vector<std::vector<NodeStat>> stats(n);
  for (int i = 0; i < n; ++i) stats[i] = node_stats(tree, data.row(i));

  // Accumulated cells per cluster and over all samples, node by node.
  out.active_theta_mean.assign(kc, std::vector<double>(n_nodes));
  out.active_tau_posterior.assign(
      kc, std::vector<std::vector<double>>(n_nodes));
  out.inactive_theta_mean.resize(n_nodes);
  out.inactive_tau_posterior.assign(n_nodes, {});
  std::vector<double> cells(grid.n_cells());
  for (int k = 0; k < n_nodes; ++k) {
    std::fill(cells.begin(), cells.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      auto row = grid_row(stats[i][k], grid);
      for (int g = 0; g < grid.n_cells(); ++g) cells[g] += row[g];
    }
    posterior_moments(cells, grid, &out.inactive_theta_mean[k],
                      &out.inactive_tau_posterior[k]);
    for (int c = 0; c < kc; ++c) {
      std::fill(cells.begin(), cells.end(), 0.0);
      for (int i = 0; i < n; ++i) {
        if (idx[i] != c) continue;
        auto row = grid_row(stats[i][k], grid);
        for (int g = 0; g < grid.n_cells(); ++g) cells[g] += row[g];
      }
      posterior_moments(cells, grid, &out.active_theta_mean[c][k],
                        &out.active_tau_posterior[c][k]);
    }
  }

  // Compositions: path products over the per-node posterior means picked by
  // the activation selector.
  out.composition.resize(kc);
  for (int c = 0; c < kc; ++c) {
    std::vector<double> theta(n_nodes);
    for (int k = 0; k < n_nodes; ++k)
      theta[k] = gamma_rep[k] ? out.active_theta_mean[c][k]
                              : out.inactive_theta_mean[k];
    out.composition[c] = inverse_tree_ratio_transform(tree, theta);
  }
  return out;
}

namespace {

ImportanceScores importance_impl(const std::vector<std::vector<double>>& rows,
                                 const std::vector<int>& idx, int kc) {
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(rows[0].size());
  std::vector<double> size(kc, 0.0);
  for (int i = 0; i < n; ++i) size[idx[i]] += 1;

  ImportanceScores out;
  out.value.assign(m, 0.0);
  out.defined.assign(m, false);
  for (int j = 0; j < m; ++j) {
    double grand = 0;
    std::vector<double> cmean(kc, 0.0);
    for (int i = 0; i < n; ++i) {
      grand += rows[i][j];
      cmean[idx[i]] += rows[i][j];
    }
    grand /= n;
    for (int c = 0; c < kc; ++c) cmean[c] /= size[c];
    double ssb = 0, ssw = 0;
    for (int c = 0; c < kc; ++c)
      ssb += size[c] * (cmean[c] - grand) * (cmean[c] - grand);
    for (int i = 0; i < n; ++i) {
      double d = rows[i][j] - cmean[idx[i]];
      ssw += d * d;
    }
    if (ssw > 0) {
      out.value[j] = ssb / ssw;
      out.defined[j] = true;
    }
  }
  return out;
}

}  // namespace

ImportanceScores otu_importance(const std::vector<std::vector<double>>& rows,
                                std::span<const int> labels) {
  if (rows.empty() || rows.size() != labels.size())
    throw std::invalid_argument("otu_importance: dimension mismatch");
  std::vector<int> distinct;
  std::vector<int> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = std::find(distinct.begin(), distinct.end(), labels[i]);
    if (it == distinct.end()) {
      distinct.push_back(labels[i]);
      idx[i] = static_cast<int>(distinct.size()) - 1;
    } else {
      idx[i] = static_cast<int>(it - distinct.begin());
    }
  }
  if (distinct.size() < 2)
    throw std::invalid_argument("otu_importance: need at least 2 clusters");
  return importance_impl(rows, idx, static_cast<int>(distinct.size()));
}

ImportanceScores otu_importance_one_vs_rest(
    const std::vector<std::vector<double>>& rows, std::span<const int> labels,
    int cluster) {
  bool found = false;
  for (auto l : labels) found = found || l == cluster;
  if (!found)
    throw std::invalid_argument("otu_importance_one_vs_rest: no such cluster");
  std::vector<int> merged(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    merged[i] = labels[i] == cluster ? 1 : 0;
  bool any_rest = false;
  for (int v : merged) any_rest = any_rest || v == 0;
  if (!any_rest)
    throw std::invalid_argument("otu_importance_one_vs_rest: single cluster");
  return otu_importance(rows, merged);
}

}  // namespace dtmm
