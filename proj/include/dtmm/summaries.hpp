#ifndef DTMM_SUMMARIES_HPP
#define DTMM_SUMMARIES_HPP

#include <span>
#include <utility>
#include <vector>

#include "dtmm/marginal.hpp"
#include "dtmm/otu_table.hpp"
#include "dtmm/sampler.hpp"

namespace dtmm {

// Posterior co-clustering probabilities (actual labels g), unit diagonal.
struct CoClusteringMatrix {
  int n = 0;
  std::vector<double> values;  // row-major n x n
  double operator()(int i, int j) const {
    return values[static_cast<std::size_t>(i) * n + j];
  }
};

CoClusteringMatrix coclustering(const PosteriorChain& chain, int threads = 0);

// The retained draw whose association matrix minimizes the squared loss
// against pi_hat; ties break toward the earliest iteration. Returns the
// draw's actual labels and its iteration index.
std::pair<std::vector<int>, int> least_squares_clustering(
    const PosteriorChain& chain, const CoClusteringMatrix& pi_hat,
    int threads = 0);

// Posterior mean of the actual activation indicator s per node.
std::vector<double> activation_means(const PosteriorChain& chain);

// Cluster centroids for a representative clustering: posterior-mean
// branching probabilities per node (cluster-specific at active nodes,
// shared across clusters at inactive ones), the per-node dispersion
// posteriors on the tau support, and the resulting leaf compositions.
struct CentroidEstimate {
  std::vector<int> cluster_labels;  // distinct labels, by first appearance
  std::vector<std::vector<double>> composition;        // [cluster][leaf]
  std::vector<std::vector<double>> active_theta_mean;  // [cluster][node]
  std::vector<double> inactive_theta_mean;             // [node]
  std::vector<std::vector<std::vector<double>>> active_tau_posterior;
  std::vector<std::vector<double>> inactive_tau_posterior;  // [node][tau]
};

CentroidEstimate centroids(const OtuTable& data, const PhyloTree& tree,
                           std::span<const int> c_rep,
                           std::span<const std::uint8_t> gamma_rep,
                           const QuadGrid& grid);

// OTU importance: between-cluster over within-cluster sum of squares per
// OTU. Entries with a zero denominator are reported undefined.
struct ImportanceScores {
  std::vector<double> value;
  std::vector<bool> defined;
};

ImportanceScores otu_importance(const std::vector<std::vector<double>>& rows,
                                std::span<const int> labels);

// One-vs-rest variant for a single cluster label.
ImportanceScores otu_importance_one_vs_rest(
    const std::vector<std::vector<double>>& rows, std::span<const int> labels,
    int cluster);

}  // namespace dtmm

#endif  // DTMM_SUMMARIES_HPP
