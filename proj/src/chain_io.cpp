#include "dtmm/chain_io.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dtmm/summaries.hpp"

namespace dtmm {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

json config_to_json(const PriorConfig& c) {
  return json{{"theta0", c.theta0},
              {"nu0", c.nu0},
              {"a0", c.a0},
              {"b0", c.b0},
              {"beta_init", c.beta_init},
              {"n_theta", c.n_theta},
              {"tau_log10_min", c.tau_log10_min},
              {"tau_log10_max", c.tau_log10_max},
              {"tau_log10_step", c.tau_log10_step},
              {"iterations", c.iterations},
              {"burnin", c.burnin},
              {"init_clusters", c.init_clusters},
              {"b_grid", c.b_grid},
              {"seed", c.seed}};
}

PriorConfig config_from_json(const json& j) {
  PriorConfig c;
  c.theta0 = j.at("theta0").get<double>();
  c.nu0 = j.at("nu0").get<double>();
  c.a0 = j.at("a0").get<double>();
  c.b0 = j.at("b0").get<double>();
  c.beta_init = j.at("beta_init").get<double>();
  c.n_theta = j.at("n_theta").get<int>();
  c.tau_log10_min = j.at("tau_log10_min").get<double>();
  c.tau_log10_max = j.at("tau_log10_max").get<double>();
  c.tau_log10_step = j.at("tau_log10_step").get<double>();
  c.iterations = j.at("iterations").get<int>();
  c.burnin = j.at("burnin").get<int>();
  c.init_clusters = j.at("init_clusters").get<int>();
  c.b_grid = j.at("b_grid").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::string fmt12(double v) {
  std::ostringstream ss;
  ss << std::setprecision(12) << v;
  return ss.str();
}

}  // namespace

std::string data_hash(const OtuTable& table) {
  std::ostringstream ss;
  for (const auto& id : table.sample_ids) ss << id << '\t';
  ss << '\n';
  for (const auto& id : table.otu_ids) ss << id << '\t';
  ss << '\n';
  for (auto v : table.counts) ss << v << ',';
  return hex64(fnv1a64(ss.str()));
}

std::string tree_hash(const PhyloTree& tree) {
  return hex64(fnv1a64(to_newick(tree)));
}

void write_chain(const std::string& path, const ChainHeader& header,
                 const std::vector<PosteriorChain>& chains) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  json h{{"format", "dtmm-chain"},
         {"version", header.version},
         {"tree_hash", header.tree_hash},
         {"data_hash", header.data_hash},
         {"n", header.n},
         {"n_leaves", header.n_leaves},
         {"sample_ids", header.sample_ids},
         {"chains", static_cast<int>(chains.size())},
         {"config", config_to_json(header.config)}};
  out << h.dump() << '\n';
  for (std::size_t ci = 0; ci < chains.size(); ++ci) {
    for (const auto& d : chains[ci].draws) {
      json r{{"chain", static_cast<int>(ci)},
             {"t", d.t},
             {"c", d.c},
             {"gamma", d.gamma},
             {"beta", d.beta},
             {"lambda", d.lambda}};
      out << r.dump() << '\n';
    }
  }
}

std::pair<ChainHeader, PosteriorChain> read_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty chain file");
  json h = json::parse(line);
  if (h.value("format", "") != "dtmm-chain")
    throw std::runtime_error(path + ": not a dtmm chain file");
  ChainHeader header;
  header.version = h.at("version").get<int>();
  if (header.version != 1)
    throw std::runtime_error(path + ": unsupported chain version");
  header.tree_hash = h.value("tree_hash", "");
  header.data_hash = h.value("data_hash", "");
  header.n = h.at("n").get<int>();
  header.n_leaves = h.at("n_leaves").get<int>();
  header.sample_ids = h.at("sample_ids").get<std::vector<std::string>>();
  header.chains = h.value("chains", 1);
  header.config = config_from_json(h.at("config"));

  PosteriorChain chain;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json r = json::parse(line, nullptr, true);
    Draw d;
    d.t = r.at("t").get<int>();
    d.c = r.at("c").get<std::vector<int>>();
    d.gamma = r.at("gamma").get<std::vector<std::uint8_t>>();
    d.beta = r.at("beta").get<double>();
    d.lambda = r.at("lambda").get<double>();
    if (static_cast<int>(d.c.size()) != header.n)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": label length mismatch");
    if (static_cast<int>(d.gamma.size()) != header.n_leaves - 1)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": gamma length mismatch");
    derive_actual(d.c, d.gamma, d.g, d.s);
    chain.draws.push_back(std::move(d));
  }
  return {header, chain};
}

void write_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  json j{{"format", "dtmm-checkpoint"},
         {"version", ck.version},
         {"next_iteration", ck.next_iteration},
         {"c", ck.labels},
         {"gamma", ck.gamma},
         {"beta", ck.beta},
         {"lambda", ck.lambda},
         {"rng", ck.rng_state},
         {"tree_hash", ck.tree_hash},
         {"data_hash", ck.data_hash},
         {"config", config_to_json(ck.config)}};
  out << j.dump() << '\n';
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  if (j.value("format", "") != "dtmm-checkpoint")
    throw std::runtime_error(path + ": not a dtmm checkpoint");
  Checkpoint ck;
  ck.version = j.at("version").get<int>();
  if (ck.version != 1)
    throw std::runtime_error(path + ": unsupported checkpoint version");
  ck.next_iteration = j.at("next_iteration").get<int>();
  ck.labels = j.at("c").get<std::vector<int>>();
  ck.gamma = j.at("gamma").get<std::vector<std::uint8_t>>();
  ck.beta = j.at("beta").get<double>();
  ck.lambda = j.at("lambda").get<double>();
  ck.rng_state = j.at("rng").get<std::string>();
  ck.tree_hash = j.value("tree_hash", "");
  ck.data_hash = j.value("data_hash", "");
  ck.config = config_from_json(j.at("config"));
  return ck;
}

std::string rng_state_string(const Rng& rng) {
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

Rng rng_from_state(const std::string& state) {
  Rng rng;
  std::istringstream ss(state);
  ss >> rng;
  if (ss.fail()) throw std::runtime_error("invalid RNG state string");
  return rng;
}

void write_coclustering_csv(const std::string& path,
                            const CoClusteringMatrix& pi,
                            const std::vector<std::string>& sample_ids) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "sample";
  for (const auto& id : sample_ids) out << ',' << id;
  out << '\n';
  for (int i = 0; i < pi.n; ++i) {
    out << sample_ids[i];
    for (int j = 0; j < pi.n; ++j) out << ',' << fmt12(pi(i, j));
    out << '\n';
  }
}

void write_labels_csv(const std::string& path,
                      const std::vector<std::string>& sample_ids,
                      const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "sample,label\n";
  for (std::size_t i = 0; i < sample_ids.size(); ++i)
    out << sample_ids[i] << ',' << labels[i] << '\n';
}

std::vector<std::pair<std::string, int>> read_labels_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::pair<std::string, int>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 'sample,label'");
    std::string id = line.substr(0, comma);
    std::string value = line.substr(comma + 1);
    if (lineno == 1 && (value == "label" || id == "sample")) continue;
    try {
      out.emplace_back(id, std::stoi(value));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": label '" + value + "' is not an integer");
    }
  }
  return out;
}

void write_activation_json(const std::string& path,
                           const std::vector<double>& means) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  json j{{"node_order", "canonical-preorder"}, {"activation_mean", means}};
  out << j.dump(2) << '\n';
}

void write_centroids_json(const std::string& path, const CentroidEstimate& ce,
                          const std::vector<std::string>& otu_ids,
                          const std::vector<double>& tau_support) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  json clusters = json::array();
  for (std::size_t c = 0; c < ce.composition.size(); ++c) {
    json comp;
    for (std::size_t j = 0; j < otu_ids.size(); ++j)
      comp[otu_ids[j]] = ce.composition[c][j];
    clusters.push_back(json{{"label", ce.cluster_labels[c]},
                            {"composition", comp},
                            {"theta_mean", ce.active_theta_mean[c]},
                            {"tau_posterior", ce.active_tau_posterior[c]}});
  }
  json j{{"node_order", "canonical-preorder"},
         {"tau_support", tau_support},
         {"clusters", clusters},
         {"inactive_theta_mean", ce.inactive_theta_mean},
         {"inactive_tau_posterior", ce.inactive_tau_posterior}};
  out << j.dump(2) << '\n';
}

void write_importance_csv(const std::string& path, const OtuTable& table,
                          const std::vector<int>& labels, bool use_raw) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::vector<int> distinct;
  for (int l : labels)
    if (std::find(distinct.begin(), distinct.end(), l) == distinct.end())
      distinct.push_back(l);
  out << "otu,global";
  for (int l : distinct) out << ",cluster_" << l;
  out << '\n';
  if (distinct.size() < 2) return;

  std::vector<std::vector<double>> rows(table.n_samples());
  for (int i = 0; i < table.n_samples(); ++i) {
    if (use_raw) {
      auto r = table.row(i);
      rows[i].assign(r.begin(), r.end());
    } else {
      rows[i] = table.relative_row(i);
    }
  }
  auto global = otu_importance(rows, labels);
  std::vector<ImportanceScores> per_cluster;
  for (int l : distinct)
    per_cluster.push_back(otu_importance_one_vs_rest(rows, labels, l));
  for (int j = 0; j < table.n_otus(); ++j) {
    out << table.otu_ids[j] << ',';
    if (global.defined[j]) out << fmt12(global.value[j]);
    for (const auto& scores : per_cluster) {
      out << ',';
      if (scores.defined[j]) out << fmt12(scores.value[j]);
    }
    out << '\n';
  }
}

std::string dt_params_json(const DtParams& params) {
  json j{{"node_order", "canonical-preorder"},
         {"mean_branch", params.mean_branch},
         {"dispersion", params.dispersion}};
  return j.dump();
}

DtParams dt_params_from_json(const std::string& text) {
  json j = json::parse(text);
  DtParams p;
  p.mean_branch = j.at("mean_branch").get<std::vector<double>>();
  p.dispersion = j.at("dispersion").get<std::vector<double>>();
  if (p.mean_branch.size() != p.dispersion.size())
    throw std::runtime_error("dt params: field length mismatch");
  return p;
}

void write_trace_csv(const std::string& path,
                     const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,k_star,sum_gamma,beta,lambda\n";
  for (const auto& r : trace)
    out << r.t << ',' << r.k_star << ',' << r.sum_gamma << ','
        << fmt12(r.beta) << ',' << fmt12(r.lambda) << '\n';
}

}  // namespace dtmm
