#ifndef DTMM_SIMGEN_HPP
#define DTMM_SIMGEN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtmm/dirichlet_tree.hpp"
#include "dtmm/otu_table.hpp"
#include "dtmm/rng.hpp"
#include "dtmm/tree.hpp"

namespace dtmm {

// ---- evaluation metrics ----

// 1 - sum of componentwise minima; inputs must be relative abundances.
double bray_curtis(std::span<const double> x, std::span<const double> y);

// Ratio of within-cluster pairwise squared Bray-Curtis sums (scaled by
// 1/cluster size) over the total pairwise sum scaled by 1/n; rows are
// normalized to relative abundance first.
double r_squared(const OtuTable& data, std::span<const int> labels);

// Pair-counting Jaccard index between two labelings.
double jaccard_index(std::span<const int> labels, std::span<const int> truth);

// sqrt(mean((J_r - 1)^2)).
double rmse_jaccard(std::span<const double> jaccards);

// ---- scenario generators ----

enum class Scenario { I, II, III, IV, V };
enum class SignalLevel { Weak, Medium, Strong };

struct ScenarioConfig {
  Scenario scenario = Scenario::II;
  SignalLevel level = SignalLevel::Medium;
  bool null_case = false;  // K = 1, always at the medium signal level
  int n = 90;
  double total_mean = 15000.0;  // negative-binomial mean
  double total_disp = 20.0;     // dispersion; variance = m + m^2/s
  std::uint64_t seed = 0;
};

struct SimulatedDataset {
  OtuTable table;
  std::vector<int> true_labels;  // 1-based
};

// The fixed six-leaf simulation tree.
const std::string& six_leaf_newick();
const PhyloTree& six_leaf_tree();

// The three-component Dirichlet-tree kernel family over the six-leaf tree:
// cluster-specific beta parameters at the node splitting OTU1/OTU2 scale
// with alpha, the remaining splits with the baseline parameter.
DtParams six_leaf_dt_kernel(int cluster, double alpha, double baseline);

// iid negative-binomial totals with mean m, variance m + m^2/s.
std::vector<std::int64_t> sample_totals(double m, double s, int n, Rng& rng);

// Composition sampler of a scenario's mixture kernels (clusters 1..3).
class ScenarioKernel {
 public:
  explicit ScenarioKernel(const ScenarioConfig& config);
  std::vector<double> draw(int cluster, Rng& rng) const;

 private:
  Scenario scenario_;
  std::vector<DtParams> dt_kernels_;
  std::vector<std::vector<double>> dir_alphas_;
  std::vector<LogisticNormalSampler> ln_samplers_;
};

SimulatedDataset generate(const ScenarioConfig& config, Rng& rng);

Scenario parse_scenario(const std::string& s);
SignalLevel parse_level(const std::string& s);

}  // namespace dtmm

#endif  // DTMM_SIMGEN_HPP
