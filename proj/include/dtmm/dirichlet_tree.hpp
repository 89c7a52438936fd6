#ifndef DTMM_DIRICHLET_TREE_HPP
#define DTMM_DIRICHLET_TREE_HPP

#include <optional>
#include <span>
#include <vector>

#include "dtmm/rng.hpp"
#include "dtmm/tree.hpp"

namespace dtmm {

// Parameters of a Dirichlet-tree distribution: per internal node (canonical
// order) a mean branching probability in (0,1) and a dispersion > 0. The
// branching probability at node A is Beta(mean*disp, (1-mean)*disp).
struct DtParams {
  std::vector<double> mean_branch;
  std::vector<double> dispersion;

  void validate(const PhyloTree& tree) const;

  // Beta shape pair at internal node k.
  double shape_left(int k) const { return mean_branch[k] * dispersion[k]; }
  double shape_right(int k) const {
    return (1.0 - mean_branch[k]) * dispersion[k];
  }
};

// Logistic-normal parameters with the last leaf as reference coordinate.
struct LogisticNormalParams {
  std::vector<double> mu;               // length M-1
  std::vector<std::vector<double>> sigma;  // (M-1) x (M-1), symmetric PSD
};

// Log density of the Dirichlet-tree distribution at a strictly interior
// composition p (density on the first M-1 leaf coordinates).
double dt_log_density(const PhyloTree& tree, const DtParams& params,
                      std::span<const double> p);

// Draw a composition: independent beta branching probabilities mapped
// through the inverse tree-ratio transform.
std::vector<double> dt_sample(const PhyloTree& tree, const DtParams& params,
                              Rng& rng);

// Exact leaf-pair covariance of the composition (j1 != j2).
double dt_covariance(const PhyloTree& tree, const DtParams& params, int j1,
                     int j2);

// Expected composition: path products of mean branching probabilities.
std::vector<double> dt_mean(const PhyloTree& tree, const DtParams& params);

// When the dispersions satisfy the Dirichlet-degeneracy constraint
// (each non-root internal node's dispersion equals the pseudo-count it
// receives from its parent, within 1e-9 relative), returns the implied
// Dirichlet parameter vector over leaves; otherwise nullopt.
std::optional<std::vector<double>> dt_to_dirichlet(const PhyloTree& tree,
                                                   const DtParams& params);

// Moment-matched (KL-optimal) logistic-normal projection: exact mean and
// covariance of log(p_j / p_M) via digamma/trigamma sums along leaf paths.
LogisticNormalParams ln_projection(const PhyloTree& tree,
                                   const DtParams& params);

// Draw from a logistic-normal distribution. The covariance square root is
// an eigendecomposition with negative eigenvalues clipped to zero.
std::vector<double> ln_sample(const LogisticNormalParams& params, Rng& rng);

// Reusable sampler state for repeated ln_sample draws (factors sigma once).
class LogisticNormalSampler {
 public:
  explicit LogisticNormalSampler(const LogisticNormalParams& params);
  std::vector<double> operator()(Rng& rng) const;

 private:
  std::vector<double> mu_;
  std::vector<std::vector<double>> root_;  // sigma^(1/2)
};

}  // namespace dtmm

#endif  // DTMM_DIRICHLET_TREE_HPP
