#ifndef DTMM_SAMPLER_HPP
#define DTMM_SAMPLER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dtmm/marginal.hpp"
#include "dtmm/otu_table.hpp"
#include "dtmm/quadrature.hpp"
#include "dtmm/rng.hpp"
#include "dtmm/tree.hpp"

namespace dtmm {

struct PriorConfig {
  double theta0 = 0.5;  // prior mean of branching probabilities
  double nu0 = 1.0;     // prior concentration (default gives Jeffreys)
  double a0 = 1.0;      // Beta prior on the activation probability lambda
  double b0 = 1.0;
  double beta_init = 1.0;  // initial DP precision
  int n_theta = 64;
  double tau_log10_min = -1.0;
  double tau_log10_max = 4.0;
  double tau_log10_step = 0.5;
  int iterations = 2000;
  int burnin = 1000;
  int init_clusters = 5;
  int b_grid = 512;  // grid sampler resolution for the DP precision
  std::uint64_t seed = 0;
  int threads = 0;

  void validate() const;
  QuadGrid make_grid() const;
};

// One retained posterior draw. Labels are 1-based and contiguous; gamma and
// s follow canonical node order. (g, s) are the interpretable counterparts
// of (c, gamma): a draw with no active node or a single cluster is reported
// as unclustered.
struct Draw {
  int t = 0;
  std::vector<int> c;
  std::vector<std::uint8_t> gamma;
  double beta = 0, lambda = 0;
  std::vector<int> g;
  std::vector<std::uint8_t> s;
};

struct TraceRow {
  int t = 0;
  int k_star = 0;
  int sum_gamma = 0;
  double beta = 0, lambda = 0;
};

struct PosteriorChain {
  std::vector<Draw> draws;      // iterations burnin+1 .. iterations
  std::vector<TraceRow> trace;  // every iteration
};

void derive_actual(const std::vector<int>& c,
                   const std::vector<std::uint8_t>& gamma, std::vector<int>& g,
                   std::vector<std::uint8_t>& s);

// log Pr(gamma) under the multiplicity-adjusted prior
// (1/M) * C(M-1, sum gamma)^(-1).
double gamma_prior_log_prob(std::span<const std::uint8_t> gamma, int n_leaves);

// The fixed grid of b = beta/(beta+1) values used by the DP-precision
// sampler: `size` midpoints of equal cells spanning (1e-4, 1-1e-4).
std::vector<double> beta_grid(int size);

// PAM-style k-medoids (build + swap, at most max_iters swap rounds) on a
// dense distance matrix; ties break toward the lower index, so the result
// is deterministic.
std::vector<int> k_medoids(const std::vector<double>& dist, int n, int k,
                           int max_iters = 100);

// Bray-Curtis k-medoids initialization of the cluster labels.
std::vector<int> init_labels(const OtuTable& data, int k_init);

// Collapsed Gibbs sampler over (c, gamma, beta, lambda); compositions and
// cluster-level parameters are integrated out on the quadrature grid.
class GibbsSampler {
 public:
  GibbsSampler(const OtuTable& data, const PhyloTree& tree,
               const PriorConfig& prior, GridRowCache* row_cache = nullptr);

  // PAM labels, all nodes active, lambda at its prior mean, beta_init.
  void init(Rng& rng);
  void set_state(const std::vector<int>& labels0,
                 const std::vector<std::uint8_t>& gamma, double beta,
                 double lambda);

  void update_gamma(Rng& rng);
  void update_labels(Rng& rng);
  void update_beta(Rng& rng);
  void update_lambda(Rng& rng);
  // One iteration in the printed order: gamma, labels, beta, lambda.
  void sweep(Rng& rng);

  // Runs iterations first_iter..iterations, recording the trace each
  // iteration and retaining draws past the burn-in.
  void run(Rng& rng, PosteriorChain& chain, int first_iter = 1);

  // Swaps in freshly generated counts of identical shape (sampler state is
  // kept; accumulators and cached marginals are rebuilt).
  void reset_counts(const std::vector<std::vector<NodeStat>>& stats);

  std::vector<int> labels() const { return acc_.compact_labels(); }
  const std::vector<std::uint8_t>& gamma() const { return gamma_; }
  double beta() const { return beta_; }
  double lambda() const { return lambda_; }
  int k_star() const { return acc_.n_clusters(); }
  int sum_gamma() const;
  const QuadGrid& grid() const { return grid_; }
  const PriorConfig& prior() const { return prior_; }

  // Grid values of the DP-precision sampler (shared with the tests).
  std::vector<double> beta_grid_points() const;

 private:
  void rebuild_marginals();
  double cluster_predictive(int c, int sample);

  PriorConfig prior_;
  const PhyloTree* tree_;
  QuadGrid grid_;
  int n_ = 0, n_nodes_ = 0;
  std::vector<std::vector<NodeStat>> stats_;
  GridRowCache* row_cache_ = nullptr;
  GridRowTable rows_;
  std::vector<double> log_l0_integrated_;        // per node, full data
  std::vector<std::vector<double>> singleton_l1_;  // [sample][node]
  AccumulatorSet acc_;
  std::vector<std::uint8_t> gamma_;
  double beta_ = 1.0, lambda_ = 0.5;
  OtuTable data_;
};

PosteriorChain gibbs_run(const OtuTable& data, const PhyloTree& tree,
                         const PriorConfig& prior, Rng& rng);

}  // namespace dtmm

#endif  // DTMM_SAMPLER_HPP
