#include "dtmm/classify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "dtmm/kernels.hpp"
#include "dtmm/sampler.hpp"
#include "dtmm/special.hpp"

namespace dtmm {

namespace {
constexpr int kModelVersion = 1;
}

ClassifierModel ClassifierModel::train(
    const OtuTable& data, std::span<const int> labels, const PhyloTree& tree,
    const PriorConfig& prior, double lambda0,
    const std::optional<std::vector<double>>& class_priors) {
  if (static_cast<int>(labels.size()) != data.n_samples())
    throw std::invalid_argument("train: label length mismatch");
  if (!(lambda0 > 0 && lambda0 < 1))
    throw std::invalid_argument("train: lambda0 in (0,1)");
  if (data.otu_ids != tree.leaf_ids())
    throw std::invalid_argument("train: table columns must match tree leaves");

  ClassifierModel m;
  m.tree_ = tree;
  m.newick_ = to_newick(tree);
  m.grid_ = prior.make_grid();
  m.theta0_ = prior.theta0;
  m.nu0_ = prior.nu0;
  m.n_theta_ = prior.n_theta;
  m.tau_min_ = prior.tau_log10_min;
  m.tau_max_ = prior.tau_log10_max;
  m.tau_step_ = prior.tau_log10_step;
  m.lambda0_ = lambda0;
  m.n_nodes_ = tree.num_internal();
  const QuadGrid& grid = m.grid_;

  std::vector<int> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = std::find(m.class_labels_.begin(), m.class_labels_.end(),
                        labels[i]);
    if (it == m.class_labels_.end()) {
      m.class_labels_.push_back(labels[i]);
      idx[i] = static_cast<int>(m.class_labels_.size()) - 1;
    } else {
      idx[i] = static_cast<int>(it - m.class_labels_.begin());
    }
  }
  const int kc = static_cast<int>(m.class_labels_.size());
  if (kc < 1) throw std::invalid_argument("train: no classes");

  if (class_priors) {
    if (static_cast<int>(class_priors->size()) != kc)
      throw std::invalid_argument("train: class prior size mismatch");
    double s = 0;
    for (double v : *class_priors) {
      if (v <= 0) throw std::invalid_argument("train: class priors must be positive");
      s += v;
    }
    m.prior_.resize(kc);
    for (int c = 0; c < kc; ++c) m.prior_[c] = (*class_priors)[c] / s;
  } else {
    std::vector<double> freq(kc, 0.0);
    for (int i : idx) freq[i] += 1;
    m.prior_.resize(kc);
    for (int c = 0; c < kc; ++c) m.prior_[c] = freq[c] / labels.size();
  }

  m.class_cells_.assign(
      kc, std::vector<std::vector<double>>(
              m.n_nodes_, std::vector<double>(grid.n_cells(), 0.0)));
  m.all_cells_.assign(m.n_nodes_,
                      std::vector<double>(grid.n_cells(), 0.0));
  for (int i = 0; i < data.n_samples(); ++i) {
    auto stats = node_stats(tree, data.row(i));
    for (int k = 0; k < m.n_nodes_; ++k) {
      auto row = grid_row(stats[k], grid);
      for (int g = 0; g < grid.n_cells(); ++g) {
        m.class_cells_[idx[i]][k][g] += row[g];
        m.all_cells_[k][g] += row[g];
      }
    }
  }
  m.class_l1_.assign(kc, std::vector<double>(m.n_nodes_));
  m.all_l0_.resize(m.n_nodes_);
  for (int k = 0; k < m.n_nodes_; ++k) {
    for (int c = 0; c < kc; ++c)
      m.class_l1_[c][k] = log_marginal_cells(m.class_cells_[c][k], grid);
    m.all_l0_[k] = log_marginal_cells(m.all_cells_[k], grid);
  }
  return m;
}

std::vector<double> ClassifierModel::activation_posterior() const {
  const int kc = static_cast<int>(class_labels_.size());
  std::vector<double> out(n_nodes_);
  for (int k = 0; k < n_nodes_; ++k) {
    double num = std::log(lambda0_);
    for (int c = 0; c < kc; ++c) num += class_l1_[c][k];
    double den = std::log1p(-lambda0_) + all_l0_[k];
    out[k] = std::exp(num - log_add_exp(num, den));
  }
  return out;
}

std::vector<double> ClassifierModel::predict(
    std::span<const std::int64_t> y_new) const {
  if (static_cast<int>(y_new.size()) != tree_.num_leaves())
    throw std::invalid_argument("predict: dimension mismatch");
  const int kc = static_cast<int>(class_labels_.size());
  auto stats = node_stats(tree_, y_new);

  std::vector<double> log_post(kc);
  for (int c = 0; c < kc; ++c) log_post[c] = std::log(prior_[c]);
  for (int k = 0; k < n_nodes_; ++k) {
    auto row = grid_row(stats[k], grid_);
    // Node activation posterior from the training data alone.
    double num = std::log(lambda0_);
    for (int c = 0; c < kc; ++c) num += class_l1_[c][k];
    double den = std::log1p(-lambda0_) + all_l0_[k];
    double z = log_add_exp(num, den);
    // Inactive predictive ratio pools every training sample.
    double r0 =
        kernels::lse_weighted_plus(all_cells_[k], row, grid_.log_wcell()) -
        all_l0_[k];
    for (int c = 0; c < kc; ++c) {
      double r1 = kernels::lse_weighted_plus(class_cells_[c][k], row,
                                             grid_.log_wcell()) -
                  class_l1_[c][k];
      log_post[c] += log_add_exp(num - z + r1, den - z + r0);
    }
  }
  double z = log_sum_exp(log_post);
  std::vector<double> out(kc);
  for (int c = 0; c < kc; ++c) out[c] = std::exp(log_post[c] - z);
  return out;
}

std::vector<double> ClassifierModel::predict_enumerate(
    std::span<const std::int64_t> y_new, GammaPrior prior) const {
  if (n_nodes_ > 16)
    throw std::invalid_argument("predict_enumerate: supports at most 17 leaves");
  if (static_cast<int>(y_new.size()) != tree_.num_leaves())
    throw std::invalid_argument("predict: dimension mismatch");
  const int kc = static_cast<int>(class_labels_.size());
  auto stats = node_stats(tree_, y_new);

  std::vector<double> num(n_nodes_), den(n_nodes_), r0(n_nodes_);
  std::vector<std::vector<double>> r1(kc, std::vector<double>(n_nodes_));
  for (int k = 0; k < n_nodes_; ++k) {
    auto row = grid_row(stats[k], grid_);
    num[k] = 0;
    for (int c = 0; c < kc; ++c) num[k] += class_l1_[c][k];
    den[k] = all_l0_[k];
    r0[k] = kernels::lse_weighted_plus(all_cells_[k], row, grid_.log_wcell()) -
            all_l0_[k];
    for (int c = 0; c < kc; ++c)
      r1[c][k] = kernels::lse_weighted_plus(class_cells_[c][k], row,
                                            grid_.log_wcell()) -
                 class_l1_[c][k];
  }

  const std::uint32_t n_masks = 1u << n_nodes_;
  std::vector<double> log_pi(n_masks);
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
    std::vector<std::uint8_t> bits(n_nodes_);
    for (int k = 0; k < n_nodes_; ++k) bits[k] = (mask >> k) & 1u;
    double lp = 0;
    if (prior == GammaPrior::Factorized) {
      for (int k = 0; k < n_nodes_; ++k)
        lp += bits[k] ? std::log(lambda0_) : std::log1p(-lambda0_);
    } else {
      lp = gamma_prior_log_prob(bits, tree_.num_leaves());
    }
    for (int k = 0; k < n_nodes_; ++k) lp += bits[k] ? num[k] : den[k];
    log_pi[mask] = lp;
  }
  double z_pi = log_sum_exp(log_pi);

  std::vector<double> log_post(kc);
  for (int c = 0; c < kc; ++c) {
    std::vector<double> terms(n_masks);
    for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
      double s = log_pi[mask] - z_pi;
      for (int k = 0; k < n_nodes_; ++k)
        s += ((mask >> k) & 1u) ? r1[c][k] : r0[k];
      terms[mask] = s;
    }
    log_post[c] = std::log(prior_[c]) + log_sum_exp(terms);
  }
  double z = log_sum_exp(log_post);
  std::vector<double> out(kc);
  for (int c = 0; c < kc; ++c) out[c] = std::exp(log_post[c] - z);
  return out;
}

std::string ClassifierModel::to_json() const {
  nlohmann::json j;
  j["format"] = "dtmm-classifier";
  j["version"] = kModelVersion;
  j["lambda0"] = lambda0_;
  j["newick"] = newick_;
  j["theta0"] = theta0_;
  j["nu0"] = nu0_;
  j["n_theta"] = n_theta_;
  j["tau_log10"] = {tau_min_, tau_max_, tau_step_};
  j["class_labels"] = class_labels_;
  j["class_prior"] = prior_;
  j["class_cells"] = class_cells_;
  j["all_cells"] = all_cells_;
  return j.dump();
}

ClassifierModel ClassifierModel::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "dtmm-classifier")
    throw std::runtime_error("classifier model: unrecognized format");
  if (j.value("version", -1) != kModelVersion)
    throw std::runtime_error("classifier model: unsupported version");
  ClassifierModel m;
  m.newick_ = j.at("newick").get<std::string>();
  m.tree_ = parse_newick(m.newick_);
  m.theta0_ = j.at("theta0").get<double>();
  m.nu0_ = j.at("nu0").get<double>();
  m.n_theta_ = j.at("n_theta").get<int>();
  auto tau_range = j.at("tau_log10").get<std::vector<double>>();
  m.tau_min_ = tau_range.at(0);
  m.tau_max_ = tau_range.at(1);
  m.tau_step_ = tau_range.at(2);
  m.grid_ = QuadGrid::make(m.theta0_, m.nu0_, m.n_theta_, m.tau_min_,
                           m.tau_max_, m.tau_step_);
  m.lambda0_ = j.at("lambda0").get<double>();
  m.class_labels_ = j.at("class_labels").get<std::vector<int>>();
  m.prior_ = j.at("class_prior").get<std::vector<double>>();
  m.class_cells_ =
      j.at("class_cells").get<std::vector<std::vector<std::vector<double>>>>();
  m.all_cells_ = j.at("all_cells").get<std::vector<std::vector<double>>>();
  m.n_nodes_ = m.tree_.num_internal();
  const int kc = static_cast<int>(m.class_labels_.size());
  m.class_l1_.assign(kc, std::vector<double>(m.n_nodes_));
  m.all_l0_.resize(m.n_nodes_);
  for (int k = 0; k < m.n_nodes_; ++k) {
    for (int c = 0; c < kc; ++c)
      m.class_l1_[c][k] = log_marginal_cells(m.class_cells_[c][k], m.grid_);
    m.all_l0_[k] = log_marginal_cells(m.all_cells_[k], m.grid_);
  }
  return m;
}

}  // namespace dtmm
