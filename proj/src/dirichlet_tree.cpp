#include "dtmm/dirichlet_tree.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "dtmm/special.hpp"

namespace dtmm {

void DtParams::validate(const PhyloTree& tree) const {
  if (static_cast<int>(mean_branch.size()) != tree.num_internal() ||
      static_cast<int>(dispersion.size()) != tree.num_internal())
    throw std::invalid_argument("DtParams: size does not match tree");
  for (int k = 0; k < tree.num_internal(); ++k) {
    if (!(mean_branch[k] > 0 && mean_branch[k] < 1))
      throw std::invalid_argument("DtParams: mean_branch must be interior");
    if (!(dispersion[k] > 0))
      throw std::invalid_argument("DtParams: dispersion must be positive");
  }
}

namespace {

// Pseudo-count flowing into a node from its parent's beta split.
double inflow(const PhyloTree& tree, const DtParams& params, int node) {
  int p = tree.parent(node);
  int k = tree.internal_index(p);
  return tree.left_child(p) == node ? params.shape_left(k)
                                    : params.shape_right(k);
}

}  // namespace

double dt_log_density(const PhyloTree& tree, const DtParams& params,
                      std::span<const double> p) {
  params.validate(tree);
  if (static_cast<int>(p.size()) != tree.num_leaves())
    throw std::invalid_argument("dt_log_density: length mismatch");

  // Subtree masses; every node must carry positive mass (interior point).
  std::vector<double> mass(tree.num_nodes(), 0.0);
  for (int j = 0; j < tree.num_leaves(); ++j) {
    if (!(p[j] > 0))
      throw std::invalid_argument("dt_log_density: p must be strictly interior");
    mass[tree.leaf_node(j)] = p[j];
  }
  for (int v = tree.num_nodes() - 1; v >= 0; --v)
    if (!tree.is_leaf(v))
      mass[v] = mass[tree.left_child(v)] + mass[tree.right_child(v)];

  // Density in leaf coordinates: product of beta kernels of the subtree
  // mass ratios together with the change of variables, which collapses to
  //   sum_j (alpha_j - 1) log x_j + sum_A (a_A - tau_A) log x_A - sum log B
  // over leaves j and non-root internal nodes A.
  double out = 0.0;
  for (int j = 0; j < tree.num_leaves(); ++j)
    out += (inflow(tree, params, tree.leaf_node(j)) - 1.0) * std::log(p[j]);
  for (int k = 0; k < tree.num_internal(); ++k) {
    int v = tree.internal_node(k);
    out -= log_beta(params.shape_left(k), params.shape_right(k));
    if (v != tree.root())
      out += (inflow(tree, params, v) - params.dispersion[k]) * std::log(mass[v]);
  }
  return out;
}

std::vector<double> dt_sample(const PhyloTree& tree, const DtParams& params,
                              Rng& rng) {
  // Branch fractions are kept as a gamma pair so that both sides retain
  // full relative precision; computing 1 - theta would flush genuinely
  // tiny right-branch masses to zero at small dispersions.
  const int n_int = tree.num_internal();
  std::vector<double> frac_left(n_int), frac_right(n_int);
  for (int k = 0; k < n_int; ++k) {
    double x = rgamma(params.shape_left(k), 1.0, rng);
    double y = rgamma(params.shape_right(k), 1.0, rng);
    if (x + y <= 0) {
      frac_left[k] = params.mean_branch[k];
      frac_right[k] = 1.0 - params.mean_branch[k];
    } else {
      frac_left[k] = x / (x + y);
      frac_right[k] = y / (x + y);
    }
  }
  std::vector<double> p(tree.num_leaves());
  for (int j = 0; j < tree.num_leaves(); ++j) {
    double prod = 1.0;
    for (const auto& step : tree.leaf_path(j))
      prod *= step.goes_left ? frac_left[step.internal_index]
                             : frac_right[step.internal_index];
    p[j] = prod;
  }
  return p;
}

std::vector<double> dt_mean(const PhyloTree& tree, const DtParams& params) {
  return inverse_tree_ratio_transform(tree, params.mean_branch);
}

double dt_covariance(const PhyloTree& tree, const DtParams& params, int j1,
                     int j2) {
  params.validate(tree);
  if (j1 == j2)
    throw std::invalid_argument(
        "dt_covariance: variance (j1 == j2) is unsupported");
  const auto& path1 = tree.leaf_path(j1);
  const auto& path2 = tree.leaf_path(j2);

  // Shared prefix of internal nodes Omega = A_0 -> ... -> A_L.
  size_t shared = 0;
  while (shared < path1.size() && shared < path2.size() &&
         path1[shared].internal_index == path2[shared].internal_index)
    ++shared;
  const int last = path1[shared - 1].internal_index;  // A_L

  // Product accumulated in log space; every factor is positive and the
  // bracket can sit near zero, so subtract 1 only at the end via expm1.
  double log_prod =
      std::log(params.dispersion[last] / (params.dispersion[last] + 1.0));
  for (size_t t = 1; t < shared; ++t) {
    int prev = path1[t - 1].internal_index;
    double a = path1[t - 1].goes_left ? params.shape_left(prev)
                                      : params.shape_right(prev);
    double tau_prev = params.dispersion[prev];
    log_prod += std::log((a + 1.0) * tau_prev) - std::log(a * (tau_prev + 1.0));
  }
  double bracket = std::expm1(log_prod);

  auto mean = dt_mean(tree, params);
  return bracket * mean[j1] * mean[j2];
}

std::optional<std::vector<double>> dt_to_dirichlet(const PhyloTree& tree,
                                                   const DtParams& params) {
  params.validate(tree);
  for (int k = 0; k < tree.num_internal(); ++k) {
    int v = tree.internal_node(k);
    if (v == tree.root()) continue;
    double expected = inflow(tree, params, v);
    if (std::abs(params.dispersion[k] - expected) >
        1e-9 * std::max(1.0, std::abs(expected)))
      return std::nullopt;
  }
  std::vector<double> alpha(tree.num_leaves());
  for (int j = 0; j < tree.num_leaves(); ++j)
    alpha[j] = inflow(tree, params, tree.leaf_node(j));
  return alpha;
}

LogisticNormalParams ln_projection(const PhyloTree& tree,
                                   const DtParams& params) {
  params.validate(tree);
  const int m = tree.num_leaves();
  const int n_int = tree.num_internal();

  // Per-node log-beta moments.
  std::vector<double> mean_l(n_int), mean_r(n_int), var_l(n_int), var_r(n_int),
      cov_lr(n_int);
  for (int k = 0; k < n_int; ++k) {
    double a = params.shape_left(k), b = params.shape_right(k);
    mean_l[k] = digamma(a) - digamma(a + b);
    mean_r[k] = digamma(b) - digamma(a + b);
    var_l[k] = trigamma(a) - trigamma(a + b);
    var_r[k] = trigamma(b) - trigamma(a + b);
    cov_lr[k] = -trigamma(a + b);
  }

  // side[j][k]: 0 = node k not on leaf j's path, 1 = left step, 2 = right.
  std::vector<std::vector<int>> side(m, std::vector<int>(n_int, 0));
  std::vector<double> mean_log_p(m, 0.0);
  for (int j = 0; j < m; ++j)
    for (const auto& step : tree.leaf_path(j)) {
      side[j][step.internal_index] = step.goes_left ? 1 : 2;
      mean_log_p[j] +=
          step.goes_left ? mean_l[step.internal_index] : mean_r[step.internal_index];
    }

  auto node_cov = [&](int sx, int sy, int k) -> double {
    if (sx == 0 || sy == 0) return 0.0;
    if (sx == sy) return sx == 1 ? var_l[k] : var_r[k];
    return cov_lr[k];
  };

  LogisticNormalParams out;
  out.mu.resize(m - 1);
  for (int j = 0; j < m - 1; ++j) out.mu[j] = mean_log_p[j] - mean_log_p[m - 1];
  out.sigma.assign(m - 1, std::vector<double>(m - 1, 0.0));
  for (int j1 = 0; j1 < m - 1; ++j1)
    for (int j2 = j1; j2 < m - 1; ++j2) {
      double s = 0.0;
      for (int k = 0; k < n_int; ++k) {
        int a = side[j1][k], b = side[j2][k], r = side[m - 1][k];
        s += node_cov(a, b, k) - node_cov(a, r, k) - node_cov(r, b, k) +
             node_cov(r, r, k);
      }
      out.sigma[j1][j2] = out.sigma[j2][j1] = s;
    }
  return out;
}

LogisticNormalSampler::LogisticNormalSampler(const LogisticNormalParams& params)
    : mu_(params.mu) {
  const int d = static_cast<int>(params.mu.size());
  if (static_cast<int>(params.sigma.size()) != d)
    throw std::invalid_argument("ln_sample: sigma dimension mismatch");
  Eigen::MatrixXd s(d, d);
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(params.sigma[i].size()) != d)
      throw std::invalid_argument("ln_sample: sigma not square");
    for (int j = 0; j < d; ++j) s(i, j) = params.sigma[i][j];
  }
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("ln_sample: sigma not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (s + s.transpose()));
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw std::invalid_argument("ln_sample: sigma not positive semi-definite");
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd root = es.eigenvectors() * ev.asDiagonal() *
                         es.eigenvectors().transpose();
  root_.assign(d, std::vector<double>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) root_[i][j] = root(i, j);
}

std::vector<double> LogisticNormalSampler::operator()(Rng& rng) const {
  const int d = static_cast<int>(mu_.size());
  std::vector<double> z(d), x(d);
  for (int i = 0; i < d; ++i) z[i] = rnorm(rng);
  for (int i = 0; i < d; ++i) {
    double acc = mu_[i];
    for (int j = 0; j < d; ++j) acc += root_[i][j] * z[j];
    x[i] = acc;
  }
  // Softmax with the reference coordinate pinned at 0.
  double mx = 0.0;
  for (double v : x) mx = std::max(mx, v);
  std::vector<double> p(d + 1);
  double total = std::exp(-mx);
  p[d] = std::exp(-mx);
  for (int i = 0; i < d; ++i) {
    p[i] = std::exp(x[i] - mx);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> ln_sample(const LogisticNormalParams& params, Rng& rng) {
  return LogisticNormalSampler(params)(rng);
}

}  // namespace dtmm
