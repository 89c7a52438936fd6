#ifndef DTMM_CLASSIFY_HPP
#define DTMM_CLASSIFY_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtmm/marginal.hpp"
#include "dtmm/otu_table.hpp"
#include "dtmm/quadrature.hpp"
#include "dtmm/sampler.hpp"
#include "dtmm/tree.hpp"

namespace dtmm {

// Supervised DTMM classifier. Training caches the per-node per-class grid
// accumulators; under the factorized per-node Bernoulli(lambda0) activation
// prior both the activation posterior and the class predictive factorize
// into per-node terms. Exact enumeration of all activation configurations
// is available as a validation mode for small trees.
class ClassifierModel {
 public:
  enum class GammaPrior { Factorized, MultiplicityAdjusted };

  static ClassifierModel train(
      const OtuTable& data, std::span<const int> labels, const PhyloTree& tree,
      const PriorConfig& prior, double lambda0 = 0.5,
      const std::optional<std::vector<double>>& class_priors = std::nullopt);

  // Normalized class posterior for a new count vector (tree leaf order).
  std::vector<double> predict(std::span<const std::int64_t> y_new) const;

  // Enumeration over all 2^(M-1) activation configurations; exact reference
  // for predict() under the factorized prior, also usable with the
  // multiplicity-adjusted prior. Requires M-1 <= 16.
  std::vector<double> predict_enumerate(
      std::span<const std::int64_t> y_new,
      GammaPrior prior = GammaPrior::Factorized) const;

  // Posterior activation probability per node under the factorized prior.
  std::vector<double> activation_posterior() const;

  const std::vector<int>& class_labels() const { return class_labels_; }
  const std::vector<double>& class_prior() const { return prior_; }
  const PhyloTree& tree() const { return tree_; }

  std::string to_json() const;
  static ClassifierModel from_json(const std::string& text);

 private:
  ClassifierModel() = default;

  PhyloTree tree_;
  std::string newick_;
  QuadGrid grid_;
  double theta0_ = 0.5, nu0_ = 1.0;
  int n_theta_ = 64;
  double tau_min_ = -1.0, tau_max_ = 4.0, tau_step_ = 0.5;
  double lambda0_ = 0.5;
  std::vector<int> class_labels_;
  std::vector<double> prior_;
  int n_nodes_ = 0;
  // [class][node][cell] accumulated log beta-binomial sums.
  std::vector<std::vector<std::vector<double>>> class_cells_;
  std::vector<std::vector<double>> all_cells_;  // [node][cell]
  std::vector<std::vector<double>> class_l1_;   // [class][node]
  std::vector<double> all_l0_;                  // [node]
};

}  // namespace dtmm

#endif  // DTMM_CLASSIFY_HPP
