#include "dtmm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dtmm/kernels.hpp"
#include "dtmm/simgen.hpp"
#include "dtmm/special.hpp"

namespace dtmm {

void PriorConfig::validate() const {
  if (!(theta0 > 0 && theta0 < 1)) throw std::invalid_argument("theta0 in (0,1)");
  if (nu0 <= 0 || a0 <= 0 || b0 <= 0 || beta_init <= 0)
    throw std::invalid_argument("prior hyperparameters must be positive");
  if (n_theta < 2 || b_grid < 2) throw std::invalid_argument("grid too small");
  if (iterations <= burnin || burnin < 0)
    throw std::invalid_argument("need 0 <= burnin < iterations");
  if (init_clusters < 1) throw std::invalid_argument("init_clusters >= 1");
}

QuadGrid PriorConfig::make_grid() const {
  return QuadGrid::make(theta0, nu0, n_theta, tau_log10_min, tau_log10_max,
                        tau_log10_step);
}

void derive_actual(const std::vector<int>& c,
                   const std::vector<std::uint8_t>& gamma, std::vector<int>& g,
                   std::vector<std::uint8_t>& s) {
  bool any_active = std::any_of(gamma.begin(), gamma.end(),
                                [](std::uint8_t v) { return v != 0; });
  bool single = std::all_of(c.begin(), c.end(),
                            [&](int v) { return v == c.front(); });
  if (!any_active || single) {
    g.assign(c.size(), 1);
    s.assign(gamma.size(), 0);
  } else {
    g = c;
    s = gamma;
  }
}

double gamma_prior_log_prob(std::span<const std::uint8_t> gamma,
                            int n_leaves) {
  if (static_cast<int>(gamma.size()) != n_leaves - 1)
    throw std::invalid_argument("gamma_prior_log_prob: length must be M-1");
  std::int64_t active = 0;
  for (auto v : gamma) active += v ? 1 : 0;
  return -std::log(static_cast<double>(n_leaves)) -
         log_choose(n_leaves - 1, active);
}

std::vector<int> k_medoids(const std::vector<double>& dist, int n, int k,
                           int max_iters) {
  if (k < 1 || k > n) throw std::invalid_argument("k_medoids: need 1 <= k <= n");
  auto d = [&](int i, int j) { return dist[static_cast<std::size_t>(i) * n + j]; };

  // BUILD: first medoid minimizes total distance, the rest greedily
  // maximize the cost reduction.
  std::vector<int> medoids;
  std::vector<char> is_medoid(n, 0);
  {
    int best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double cost = 0;
      for (int j = 0; j < n; ++j) cost += d(i, j);
      if (cost < best_cost) {
        best_cost = cost;
        best = i;
      }
    }
    medoids.push_back(best);
    is_medoid[best] = 1;
  }
  std::vector<double> nearest(n);
  for (int j = 0; j < n; ++j) nearest[j] = d(medoids[0], j);
  while (static_cast<int>(medoids.size()) < k) {
    int best = -1;
    double best_gain = -1.0;
    for (int i = 0; i < n; ++i) {
      if (is_medoid[i]) continue;
      double gain = 0;
      for (int j = 0; j < n; ++j)
        gain += std::max(0.0, nearest[j] - d(i, j));
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    medoids.push_back(best);
    is_medoid[best] = 1;
    for (int j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], d(best, j));
  }

  // SWAP rounds: apply the best strictly improving (medoid, candidate) swap.
  auto total_cost = [&]() {
    double cost = 0;
    for (int j = 0; j < n; ++j) {
      double mn = std::numeric_limits<double>::infinity();
      for (int m : medoids) mn = std::min(mn, d(m, j));
      cost += mn;
    }
    return cost;
  };
  double cost = total_cost();
  for (int iter = 0; iter < max_iters; ++iter) {
    double best_cost = cost;
    int best_m = -1, best_c = -1;
    for (std::size_t mi = 0; mi < medoids.size(); ++mi) {
      int old = medoids[mi];
      for (int cand = 0; cand < n; ++cand) {
        if (is_medoid[cand]) continue;
        medoids[mi] = cand;
        double trial = total_cost();
        if (trial < best_cost - 1e-15) {
          best_cost = trial;
          best_m = static_cast<int>(mi);
          best_c = cand;
        }
      }
      medoids[mi] = old;
    }
    if (best_m < 0) break;
    is_medoid[medoids[best_m]] = 0;
    is_medoid[best_c] = 1;
    medoids[best_m] = best_c;
    cost = best_cost;
  }

  std::vector<int> labels(n, 0);
  for (int j = 0; j < n; ++j) {
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t mi = 0; mi < medoids.size(); ++mi)
      if (d(medoids[mi], j) < mn) {
        mn = d(medoids[mi], j);
        labels[j] = static_cast<int>(mi);
      }
  }
  return labels;
}

std::vector<int> init_labels(const OtuTable& data, int k_init) {
  const int n = data.n_samples();
  std::vector<std::vector<double>> rel(n);
  for (int i = 0; i < n; ++i) rel[i] = data.relative_row(i);
  std::vector<double> dist(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double d = bray_curtis(rel[i], rel[j]);
      dist[static_cast<std::size_t>(i) * n + j] = d;
      dist[static_cast<std::size_t>(j) * n + i] = d;
    }
  return k_medoids(dist, n, std::min(k_init, n));
}

GibbsSampler::GibbsSampler(const OtuTable& data, const PhyloTree& tree,
                           const PriorConfig& prior, GridRowCache* row_cache)
    : prior_(prior),
      tree_(&tree),
      grid_(prior.make_grid()),
      row_cache_(row_cache),
      acc_(data.n_samples(), tree.num_internal(), grid_),
      data_(data) {
  prior_.validate();
  if (data.otu_ids != tree.leaf_ids())
    throw std::invalid_argument(
        "sampler: table columns must match tree leaves (use matched_to_tree)");
  n_ = data.n_samples();
  n_nodes_ = tree.num_internal();
  if (n_ < 1) throw std::invalid_argument("sampler: empty table");
  stats_.resize(n_);
  for (int i = 0; i < n_; ++i) stats_[i] = node_stats(tree, data.row(i));
  rows_ = GridRowTable(stats_, grid_, prior_.threads, row_cache_);
  rebuild_marginals();
  gamma_.assign(n_nodes_, 1);
}

void GibbsSampler::rebuild_marginals() {
  // Inactive-node integral over the full data: membership never changes
  // within a run, computed once. Singleton marginals back the new-cluster
  // weights.
  log_l0_integrated_.assign(n_nodes_, 0.0);
  std::vector<double> cells(grid_.n_cells());
  for (int k = 0; k < n_nodes_; ++k) {
    std::fill(cells.begin(), cells.end(), 0.0);
    for (int i = 0; i < n_; ++i) {
      auto row = rows_.row(i, k);
      for (int g = 0; g < grid_.n_cells(); ++g) cells[g] += row[g];
    }
    log_l0_integrated_[k] = log_marginal_cells(cells, grid_);
  }
  singleton_l1_.assign(n_, std::vector<double>(n_nodes_));
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k < n_nodes_; ++k)
      singleton_l1_[i][k] = log_marginal_cells(rows_.row(i, k), grid_);
}

void GibbsSampler::init(Rng&) {
  auto labels0 = init_labels(data_, std::min(prior_.init_clusters, n_));
  set_state(labels0, std::vector<std::uint8_t>(n_nodes_, 1), prior_.beta_init,
            prior_.a0 / (prior_.a0 + prior_.b0));
}

void GibbsSampler::set_state(const std::vector<int>& labels0,
                             const std::vector<std::uint8_t>& gamma,
                             double beta, double lambda) {
  if (static_cast<int>(labels0.size()) != n_ ||
      static_cast<int>(gamma.size()) != n_nodes_)
    throw std::invalid_argument("set_state: dimension mismatch");
  acc_ = AccumulatorSet(n_, n_nodes_, grid_);
  std::vector<int> relabel;
  for (int i = 0; i < n_; ++i) {
    int raw = labels0[i];
    auto it = std::find(relabel.begin(), relabel.end(), raw);
    int c;
    if (it == relabel.end()) {
      relabel.push_back(raw);
      c = static_cast<int>(relabel.size()) - 1;
    } else {
      c = static_cast<int>(it - relabel.begin());
    }
    acc_.add(i, c, rows_);
  }
  gamma_ = gamma;
  beta_ = beta;
  lambda_ = lambda;
}

void GibbsSampler::reset_counts(const std::vector<std::vector<NodeStat>>& stats) {
  if (static_cast<int>(stats.size()) != n_)
    throw std::invalid_argument("reset_counts: sample count mismatch");
  auto labels0 = acc_.compact_labels();
  stats_ = stats;
  rows_ = GridRowTable(stats_, grid_, prior_.threads, row_cache_);
  rebuild_marginals();
  set_state(labels0, gamma_, beta_, lambda_);
}

int GibbsSampler::sum_gamma() const {
  int s = 0;
  for (auto v : gamma_) s += v ? 1 : 0;
  return s;
}

void GibbsSampler::update_gamma(Rng& rng) {
  acc_.canonicalize();
  const int kc = acc_.n_clusters();
  std::vector<double> log_bf(n_nodes_);
  const int threads = kernels::resolve_threads(prior_.threads);
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(static) \
    if (threads > 1 && n_nodes_ >= 16)
#endif
  for (int k = 0; k < n_nodes_; ++k) {
    double s = 0;
    for (int c = 0; c < kc; ++c)
      s += log_marginal_cells(acc_.cells(c, k), grid_);
    log_bf[k] = s - log_l0_integrated_[k];
  }
  const double logit_lambda = std::log(lambda_) - std::log1p(-lambda_);
  for (int k = 0; k < n_nodes_; ++k) {
    double log_p1 = log_sigmoid(logit_lambda + log_bf[k]);
    gamma_[k] = std::log(runif(rng)) < log_p1 ? 1 : 0;
  }
}

double GibbsSampler::cluster_predictive(int c, int sample) {
  // sum over active nodes of log L1(y_i, Y_c) - log L1(Y_c).
  double s = 0;
  for (int k = 0; k < n_nodes_; ++k) {
    if (!gamma_[k]) continue;
    s += log_marginal_cells_plus(acc_.cells(c, k), rows_.row(sample, k), grid_) -
         acc_.log_l1(c, k, rows_);
  }
  return s;
}

void GibbsSampler::update_labels(Rng& rng) {
  acc_.canonicalize();
  std::vector<double> log_w;
  for (int i = 0; i < n_; ++i) {
    acc_.remove(i, rows_);
    const int kc = acc_.n_clusters();
    log_w.resize(kc + 1);
    for (int c = 0; c < kc; ++c)
      log_w[c] = std::log(static_cast<double>(acc_.cluster_size(c))) +
                 cluster_predictive(c, i);
    double lnew = std::log(beta_);
    for (int k = 0; k < n_nodes_; ++k)
      if (gamma_[k]) lnew += singleton_l1_[i][k];
    log_w[kc] = lnew;
    int pick = categorical_from_log_weights(log_w, rng);
    acc_.add(i, pick, rows_);
  }
}

std::vector<double> beta_grid(int size) {
  const double lo = 1e-4, hi = 1.0 - 1e-4;
  std::vector<double> b(size);
  for (int j = 0; j < size; ++j) b[j] = lo + (j + 0.5) * (hi - lo) / size;
  return b;
}

std::vector<double> GibbsSampler::beta_grid_points() const {
  return beta_grid(prior_.b_grid);
}

void GibbsSampler::update_beta(Rng& rng) {
  // b = beta/(beta+1) resampled on a fixed grid under a uniform prior.
  auto b = beta_grid_points();
  const double kc = acc_.n_clusters();
  std::vector<double> log_dens(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    double x = b[j] / (1.0 - b[j]);
    log_dens[j] = kc * std::log(x) + std::lgamma(x) - std::lgamma(x + n_);
  }
  int pick = categorical_from_log_weights(log_dens, rng);
  beta_ = b[pick] / (1.0 - b[pick]);
}

void GibbsSampler::update_lambda(Rng& rng) {
  int active = sum_gamma();
  lambda_ = rbeta(prior_.a0 + active, prior_.b0 + (n_nodes_ - active), rng);
}

void GibbsSampler::sweep(Rng& rng) {
  update_gamma(rng);
  update_labels(rng);
  update_beta(rng);
  update_lambda(rng);
}

void GibbsSampler::run(Rng& rng, PosteriorChain& chain, int first_iter) {
  for (int t = first_iter; t <= prior_.iterations; ++t) {
    sweep(rng);
    chain.trace.push_back({t, k_star(), sum_gamma(), beta_, lambda_});
    if (t > prior_.burnin) {
      Draw d;
      d.t = t;
      d.c = acc_.compact_labels();
      for (int& v : d.c) ++v;  // serialized labels are 1-based
      d.gamma = gamma_;
      d.beta = beta_;
      d.lambda = lambda_;
      derive_actual(d.c, d.gamma, d.g, d.s);
      chain.draws.push_back(std::move(d));
    }
  }
}

PosteriorChain gibbs_run(const OtuTable& data, const PhyloTree& tree,
                         const PriorConfig& prior, Rng& rng) {
  GibbsSampler sampler(data, tree, prior);
  sampler.init(rng);
  PosteriorChain chain;
  chain.draws.reserve(prior.iterations - prior.burnin);
  sampler.run(rng, chain);
  return chain;
}

}  // namespace dtmm
