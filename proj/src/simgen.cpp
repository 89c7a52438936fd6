#include "dtmm/simgen.hpp"

#include <cmath>
#include <stdexcept>

#include "dtmm/special.hpp"

namespace dtmm {

double bray_curtis(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("bray_curtis: length mismatch");
  double s = 0;
  for (std::size_t j = 0; j < x.size(); ++j) s += std::min(x[j], y[j]);
  return 1.0 - s;
}

double r_squared(const OtuTable& data, std::span<const int> labels) {
  const int n = data.n_samples();
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("r_squared: label length mismatch");
  std::vector<std::vector<double>> rel(n);
  for (int i = 0; i < n; ++i) rel[i] = data.relative_row(i);

  std::vector<int> distinct;
  std::vector<double> cluster_size;
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) {
    auto it = std::find(distinct.begin(), distinct.end(), labels[i]);
    if (it == distinct.end()) {
      distinct.push_back(labels[i]);
      cluster_size.push_back(0);
      idx[i] = static_cast<int>(distinct.size()) - 1;
    } else {
      idx[i] = static_cast<int>(it - distinct.begin());
    }
    cluster_size[idx[i]] += 1;
  }

  double within = 0, total = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double d = bray_curtis(rel[i], rel[j]);
      total += d * d / n;
      if (idx[i] == idx[j]) within += d * d / cluster_size[idx[i]];
    }
  if (total == 0) return 1.0;
  return within / total;
}

double jaccard_index(std::span<const int> labels, std::span<const int> truth) {
  if (labels.size() != truth.size())
    throw std::invalid_argument("jaccard_index: length mismatch");
  const int n = static_cast<int>(labels.size());
  auto pairs = [](double m) { return m * (m - 1) / 2; };

  // Contingency counts over (label, truth) pairs.
  std::vector<std::pair<int, int>> keys;
  std::vector<double> cell;
  std::vector<int> la, lb;
  std::vector<double> rows, cols;
  auto index_of = [](std::vector<int>& v, int x) {
    auto it = std::find(v.begin(), v.end(), x);
    if (it == v.end()) {
      v.push_back(x);
      return static_cast<int>(v.size()) - 1;
    }
    return static_cast<int>(it - v.begin());
  };
  for (int i = 0; i < n; ++i) {
    int a = index_of(la, labels[i]);
    int b = index_of(lb, truth[i]);
    if (static_cast<int>(rows.size()) < static_cast<int>(la.size()))
      rows.resize(la.size(), 0);
    if (static_cast<int>(cols.size()) < static_cast<int>(lb.size()))
      cols.resize(lb.size(), 0);
    rows[a] += 1;
    cols[b] += 1;
    auto key = std::make_pair(a, b);
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      cell.push_back(1);
    } else {
      cell[it - keys.begin()] += 1;
    }
  }
  double both = 0;
  for (double m : cell) both += pairs(m);
  double in_a = 0, in_b = 0;
  for (double m : rows) in_a += pairs(m);
  for (double m : cols) in_b += pairs(m);
  double either = in_a + in_b - both;
  // Two all-singleton partitions are the same partition.
  if (either == 0) return 1.0;
  return both / either;
}

double rmse_jaccard(std::span<const double> jaccards) {
  if (jaccards.empty()) throw std::invalid_argument("rmse_jaccard: empty");
  double s = 0;
  for (double j : jaccards) s += (j - 1.0) * (j - 1.0);
  return std::sqrt(s / jaccards.size());
}

const std::string& six_leaf_newick() {
  static const std::string nwk = "((o1,o2),((o3,o4),(o5,o6)));";
  return nwk;
}

const PhyloTree& six_leaf_tree() {
  static const PhyloTree tree = parse_newick(six_leaf_newick());
  return tree;
}

DtParams six_leaf_dt_kernel(int cluster, double alpha, double baseline) {
  if (cluster < 1 || cluster > 3)
    throw std::invalid_argument("six_leaf_dt_kernel: cluster in 1..3");
  // Beta shape pairs in canonical node order: root, {o1,o2}, {o3..o6},
  // {o3,o4}, {o5,o6}. The {o1,o2} split carries the cluster signal.
  const double nu[3][2] = {{10, 2}, {6, 6}, {2, 10}};
  double shapes[5][2] = {
      {12 * alpha, 12 * alpha},
      {nu[cluster - 1][0] * alpha, nu[cluster - 1][1] * alpha},
      {8 * baseline, 4 * baseline},
      {4 * baseline, 4 * baseline},
      {2 * baseline, 2 * baseline},
  };
  DtParams params;
  params.mean_branch.resize(5);
  params.dispersion.resize(5);
  for (int k = 0; k < 5; ++k) {
    params.dispersion[k] = shapes[k][0] + shapes[k][1];
    params.mean_branch[k] = shapes[k][0] / params.dispersion[k];
  }
  return params;
}

std::vector<std::int64_t> sample_totals(double m, double s, int n, Rng& rng) {
  std::vector<std::int64_t> out(n);
  for (int i = 0; i < n; ++i) out[i] = rnegbinom(m, s, rng);
  return out;
}

namespace {

std::vector<double> dirichlet_draw(std::span<const double> alpha, Rng& rng) {
  std::vector<double> p(alpha.size());
  double total = 0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    p[j] = rgamma(alpha[j], 1.0, rng);
    total += p[j];
  }
  for (double& v : p) v /= total;
  return p;
}

double level_param_i(SignalLevel level) {
  switch (level) {
    case SignalLevel::Weak: return 1;
    case SignalLevel::Medium: return 3;
    case SignalLevel::Strong: return 6;
  }
  return 3;
}

}  // namespace

Scenario parse_scenario(const std::string& s) {
  if (s == "I" || s == "1") return Scenario::I;
  if (s == "II" || s == "2") return Scenario::II;
  if (s == "III" || s == "3") return Scenario::III;
  if (s == "IV" || s == "4") return Scenario::IV;
  if (s == "V" || s == "5") return Scenario::V;
  throw std::invalid_argument("unknown scenario '" + s + "'");
}

SignalLevel parse_level(const std::string& s) {
  if (s == "W" || s == "w" || s == "weak") return SignalLevel::Weak;
  if (s == "M" || s == "m" || s == "medium") return SignalLevel::Medium;
  if (s == "S" || s == "s" || s == "strong") return SignalLevel::Strong;
  throw std::invalid_argument("unknown signal level '" + s + "'");
}

ScenarioKernel::ScenarioKernel(const ScenarioConfig& config)
    : scenario_(config.scenario) {
  const PhyloTree& tree = six_leaf_tree();
  const SignalLevel level =
      config.null_case ? SignalLevel::Medium : config.level;
  switch (config.scenario) {
    case Scenario::I: {
      double a = level_param_i(level);
      for (int k = 1; k <= 3; ++k)
        dt_kernels_.push_back(six_leaf_dt_kernel(k, a, 0.1));
      break;
    }
    case Scenario::II: {
      double a0 = level_param_i(level);
      dir_alphas_ = {{2, 2, 5, 2, 3, 1}, {2, 4, 3, 2, 1, 3}, {2, 6, 1, 2, 2, 2}};
      for (auto& alpha : dir_alphas_)
        for (double& v : alpha) v *= a0;
      break;
    }
    case Scenario::III: {
      double a = level == SignalLevel::Weak     ? 3
                 : level == SignalLevel::Medium ? 6
                                                : 9;
      for (int k = 1; k <= 3; ++k)
        ln_samplers_.emplace_back(
            ln_projection(tree, six_leaf_dt_kernel(k, a, 0.5)));
      break;
    }
    case Scenario::IV: {
      double a = level == SignalLevel::Weak ? 5 : level == SignalLevel::Medium ? 2 : 1;
      double b = level == SignalLevel::Weak ? 3 : level == SignalLevel::Medium ? 2 : 1;
      std::vector<std::vector<double>> mus = {
          {3, 1, a, b, 0}, {2.43, 2.43, a, b, 0}, {1, 3, a, b, 0}};
      std::vector<double> diag = {0.05, 0.05, 1, 1, 1};
      for (auto& mu : mus) {
        LogisticNormalParams p;
        p.mu = mu;
        p.sigma.assign(5, std::vector<double>(5, 0.0));
        for (int j = 0; j < 5; ++j) p.sigma[j][j] = diag[j];
        ln_samplers_.emplace_back(p);
      }
      break;
    }
    case Scenario::V: {
      double c = level == SignalLevel::Weak ? 6 : level == SignalLevel::Medium ? 3 : 1;
      double d = c;
      std::vector<std::vector<double>> mus = {
          {c, d, 3.5, 3, 2.5}, {c, d, 2.5, 3.5, 3}, {c, d, 3, 2.5, 3.5}};
      std::vector<double> diag = {1, 1, 0.05, 0.05, 0.05};
      for (auto& mu : mus) {
        LogisticNormalParams p;
        p.mu = mu;
        p.sigma.assign(5, std::vector<double>(5, 0.0));
        for (int j = 0; j < 5; ++j) p.sigma[j][j] = diag[j];
        ln_samplers_.emplace_back(p);
      }
      break;
    }
  }
}

std::vector<double> ScenarioKernel::draw(int cluster, Rng& rng) const {
  if (cluster < 1 || cluster > 3)
    throw std::invalid_argument("ScenarioKernel: cluster in 1..3");
  switch (scenario_) {
    case Scenario::I:
      return dt_sample(six_leaf_tree(), dt_kernels_[cluster - 1], rng);
    case Scenario::II:
      return dirichlet_draw(dir_alphas_[cluster - 1], rng);
    default:
      return ln_samplers_[cluster - 1](rng);
  }
}

SimulatedDataset generate(const ScenarioConfig& config, Rng& rng) {
  const PhyloTree& tree = six_leaf_tree();
  ScenarioKernel kernel(config);
  const double weights[3] = {4.0 / 9, 3.0 / 9, 2.0 / 9};
  SimulatedDataset out;
  out.table.otu_ids = tree.leaf_ids();
  auto totals = sample_totals(config.total_mean, config.total_disp, config.n, rng);
  for (int i = 0; i < config.n; ++i) {
    int cluster = 1;
    if (!config.null_case) {
      double u = runif(rng);
      cluster = u < weights[0] ? 1 : u < weights[0] + weights[1] ? 2 : 3;
    }
    out.true_labels.push_back(cluster);
    auto p = kernel.draw(cluster, rng);
    auto y = rmultinom(totals[i], p, rng);
    out.table.sample_ids.push_back("s" + std::to_string(i + 1));
    out.table.counts.insert(out.table.counts.end(), y.begin(), y.end());
  }
  return out;
}

}  // namespace dtmm
