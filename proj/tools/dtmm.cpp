// Command-line interface: fit / simulate / summarize / classify /
// transform / eval. Exit codes: 0 success, 1 validation or runtime
// failure, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dtmm/chain_io.hpp"
#include "dtmm/classify.hpp"
#include "dtmm/kernels.hpp"
#include "dtmm/sampler.hpp"
#include "dtmm/simgen.hpp"
#include "dtmm/summaries.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

dtmm::PhyloTree load_tree(const std::string& path, bool resolve) {
  return dtmm::parse_newick(read_file(path), resolve);
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(std::stod(field));
  return out;
}

std::string fmt12(double v) {
  std::ostringstream ss;
  ss << std::setprecision(12) << v;
  return ss.str();
}

struct FitOptions {
  std::string table_path, tree_path, out_dir;
  std::string resume_path, checkpoint_path;
  int checkpoint_every = 0;
  int chains = 1;
  std::int64_t min_row_total = 0;
  bool resolve_multifurcations = false;
  bool raw_importance = false;
  bool iters_given = false, burnin_given = false;
  dtmm::PriorConfig config;
};

void add_prior_flags(CLI::App* cmd, dtmm::PriorConfig& c) {
  cmd->add_option("--iters", c.iterations, "Total Gibbs iterations");
  cmd->add_option("--burnin", c.burnin, "Burn-in iterations to discard");
  cmd->add_option("--theta0", c.theta0, "Prior mean of branching probabilities");
  cmd->add_option("--nu0", c.nu0, "Prior concentration");
  cmd->add_option("--a0", c.a0, "Beta prior a for lambda");
  cmd->add_option("--b0", c.b0, "Beta prior b for lambda");
  cmd->add_option("--beta-init", c.beta_init, "Initial DP precision");
  cmd->add_option("--kinit", c.init_clusters, "k-medoids initial clusters");
  cmd->add_option("--grid-theta", c.n_theta, "Theta quadrature size");
  cmd->add_option("--tau-grid", [&c](const std::vector<std::string>& vals) {
        auto parts = parse_double_list(vals.at(0));
        if (parts.size() != 3) return false;
        c.tau_log10_min = parts[0];
        c.tau_log10_max = parts[1];
        c.tau_log10_step = parts[2];
        return true;
      },
      "Dispersion support as log10 'min,max,step' (default -1,4,0.5)");
  cmd->add_option("--b-grid", c.b_grid, "Grid size of the DP precision sampler");
  cmd->add_option("--seed", c.seed, "RNG seed");
  cmd->add_option("--threads", c.threads,
                  "Worker threads (0 = DTMM_THREADS or OpenMP default)");
}

int run_fit(const FitOptions& opt) {
  auto tree = load_tree(opt.tree_path, opt.resolve_multifurcations);
  auto raw = dtmm::read_otu_table(opt.table_path);
  auto table = raw.matched_to_tree(tree).filtered(opt.min_row_total);
  if (table.n_samples() == 0)
    throw std::runtime_error("fit: no samples left after filtering");
  for (int i = 0; i < table.n_samples(); ++i)
    if (table.total(i) <= 0)
      throw std::runtime_error("fit: sample '" + table.sample_ids[i] +
                               "' has zero total count; use --min-row-total");

  fs::create_directories(opt.out_dir);
  dtmm::ChainHeader header;
  header.tree_hash = dtmm::tree_hash(tree);
  header.data_hash = dtmm::data_hash(table);
  header.n = table.n_samples();
  header.n_leaves = table.n_otus();
  header.sample_ids = table.sample_ids;
  header.config = opt.config;

  const bool fresh_multi =
      opt.resume_path.empty() &&
      (opt.checkpoint_every <= 0 || opt.checkpoint_path.empty());
  std::vector<dtmm::PosteriorChain> chains(opt.chains);
  if (fresh_multi && opt.chains > 1) {
    // Independent chains run concurrently; each owns its RNG stream, so the
    // result does not depend on scheduling.
    std::exception_ptr error;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) \
    num_threads(dtmm::kernels::resolve_threads(opt.config.threads))
#endif
    for (int ci = 0; ci < opt.chains; ++ci) {
      try {
        dtmm::GibbsSampler sampler(table, tree, opt.config);
        auto rng = dtmm::make_rng(opt.config.seed, ci);
        sampler.init(rng);
        sampler.run(rng, chains[ci]);
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  } else if (!opt.resume_path.empty()) {
    if (opt.chains != 1)
      throw std::runtime_error("fit: --resume supports a single chain");
    auto ck = dtmm::read_checkpoint(opt.resume_path);
    if (ck.tree_hash != header.tree_hash || ck.data_hash != header.data_hash)
      throw std::runtime_error("fit: checkpoint does not match inputs");
    // The snapshot pins the configuration; --iters/--burnin may extend it.
    dtmm::PriorConfig cfg = ck.config;
    if (opt.iters_given) cfg.iterations = opt.config.iterations;
    if (opt.burnin_given) cfg.burnin = opt.config.burnin;
    if (ck.next_iteration > cfg.iterations)
      throw std::runtime_error(
          "fit: checkpoint is already at the final iteration; pass a larger "
          "--iters to continue");
    dtmm::GibbsSampler sampler(table, tree, cfg);
    std::vector<int> labels0 = ck.labels;
    for (int& v : labels0) --v;
    sampler.set_state(labels0, ck.gamma, ck.beta, ck.lambda);
    auto rng = dtmm::rng_from_state(ck.rng_state);
    header.config = cfg;
    sampler.run(rng, chains[0], ck.next_iteration);
  } else {
    for (int ci = 0; ci < opt.chains; ++ci) {
      dtmm::GibbsSampler sampler(table, tree, opt.config);
      auto rng = dtmm::make_rng(opt.config.seed, ci);
      sampler.init(rng);
      if (opt.checkpoint_every > 0 && !opt.checkpoint_path.empty() &&
          opt.chains == 1) {
        int t = 1;
        while (t <= opt.config.iterations) {
          int stop = std::min(opt.config.iterations,
                              t + opt.checkpoint_every - 1);
          dtmm::PriorConfig stage = opt.config;
          // Run [t, stop] with the original schedule, then snapshot.
          dtmm::GibbsSampler* s = &sampler;
          for (int it = t; it <= stop; ++it) {
            s->sweep(rng);
            chains[ci].trace.push_back({it, s->k_star(), s->sum_gamma(),
                                        s->beta(), s->lambda()});
            if (it > stage.burnin) {
              dtmm::Draw d;
              d.t = it;
              d.c = s->labels();
              for (int& v : d.c) ++v;
              d.gamma = s->gamma();
              d.beta = s->beta();
              d.lambda = s->lambda();
              dtmm::derive_actual(d.c, d.gamma, d.g, d.s);
              chains[ci].draws.push_back(std::move(d));
            }
          }
          dtmm::Checkpoint ck;
          ck.next_iteration = stop + 1;
          ck.labels = sampler.labels();
          for (int& v : ck.labels) ++v;
          ck.gamma = sampler.gamma();
          ck.beta = sampler.beta();
          ck.lambda = sampler.lambda();
          ck.rng_state = dtmm::rng_state_string(rng);
          ck.tree_hash = header.tree_hash;
          ck.data_hash = header.data_hash;
          ck.config = opt.config;
          dtmm::write_checkpoint(opt.checkpoint_path, ck);
          t = stop + 1;
        }
      } else {
        sampler.run(rng, chains[ci]);
      }
    }
  }

  dtmm::write_chain((fs::path(opt.out_dir) / "chain.jsonl").string(), header,
                    chains);
  {
    std::ofstream trace((fs::path(opt.out_dir) / "trace.csv").string());
    trace << "chain,t,k_star,sum_gamma,beta,lambda\n";
    for (std::size_t ci = 0; ci < chains.size(); ++ci)
      for (const auto& r : chains[ci].trace)
        trace << ci << ',' << r.t << ',' << r.k_star << ',' << r.sum_gamma
              << ',' << fmt12(r.beta) << ',' << fmt12(r.lambda) << '\n';
  }

  // Pool retained draws across chains for the summaries.
  dtmm::PosteriorChain pooled;
  for (auto& ch : chains)
    for (auto& d : ch.draws) pooled.draws.push_back(d);

  auto pi = dtmm::coclustering(pooled, opt.config.threads);
  auto [cls, t_ls] = dtmm::least_squares_clustering(pooled, pi,
                                                    opt.config.threads);
  dtmm::write_coclustering_csv(
      (fs::path(opt.out_dir) / "coclustering.csv").string(), pi,
      table.sample_ids);
  dtmm::write_labels_csv((fs::path(opt.out_dir) / "cls_labels.csv").string(),
                         table.sample_ids, cls);
  dtmm::write_activation_json(
      (fs::path(opt.out_dir) / "activation_means.json").string(),
      dtmm::activation_means(pooled));

  const dtmm::Draw* rep = nullptr;
  for (const auto& d : pooled.draws)
    if (d.g == cls) {
      rep = &d;
      break;
    }
  auto grid = header.config.make_grid();
  auto ce = dtmm::centroids(table, tree, cls, rep->s, grid);
  dtmm::write_centroids_json(
      (fs::path(opt.out_dir) / "centroids.json").string(), ce, table.otu_ids,
      grid.tau);
  dtmm::write_importance_csv(
      (fs::path(opt.out_dir) / "importance.csv").string(), table, cls,
      opt.raw_importance);
  std::cout << "fit: " << pooled.draws.size() << " retained draws, C_LS from t="
            << t_ls << ", " << ce.composition.size() << " clusters\n";
  return 0;
}

int run_simulate(const std::string& scenario, const std::string& level,
                 bool null_case, int n, std::uint64_t seed, double m, double s,
                 const std::string& out_dir) {
  dtmm::ScenarioConfig config;
  config.scenario = dtmm::parse_scenario(scenario);
  if (!null_case) config.level = dtmm::parse_level(level);
  config.null_case = null_case;
  config.n = n;
  config.total_mean = m;
  config.total_disp = s;
  config.seed = seed;
  auto rng = dtmm::make_rng(seed);
  auto sim = dtmm::generate(config, rng);
  fs::create_directories(out_dir);
  dtmm::write_otu_table(sim.table, (fs::path(out_dir) / "table.tsv").string());
  dtmm::write_labels_csv((fs::path(out_dir) / "labels.csv").string(),
                         sim.table.sample_ids, sim.true_labels);
  std::ofstream nwk((fs::path(out_dir) / "tree.nwk").string());
  nwk << dtmm::six_leaf_newick() << '\n';
  std::cout << "simulate: wrote " << n << " samples to " << out_dir << '\n';
  return 0;
}

int run_summarize(const std::string& chain_path, const std::string& table_path,
                  const std::string& tree_path, const std::string& out_dir,
                  int threads, bool raw_importance) {
  auto [header, chain] = dtmm::read_chain(chain_path);
  auto tree = load_tree(tree_path, false);
  auto table = dtmm::read_otu_table(table_path).matched_to_tree(tree);
  if (dtmm::tree_hash(tree) != header.tree_hash)
    throw std::runtime_error("summarize: tree does not match chain header");
  if (dtmm::data_hash(table) != header.data_hash)
    throw std::runtime_error("summarize: table does not match chain header");

  fs::create_directories(out_dir);
  auto pi = dtmm::coclustering(chain, threads);
  auto [cls, t_ls] = dtmm::least_squares_clustering(chain, pi, threads);
  dtmm::write_coclustering_csv(
      (fs::path(out_dir) / "coclustering.csv").string(), pi, table.sample_ids);
  dtmm::write_labels_csv((fs::path(out_dir) / "cls_labels.csv").string(),
                         table.sample_ids, cls);
  dtmm::write_activation_json(
      (fs::path(out_dir) / "activation_means.json").string(),
      dtmm::activation_means(chain));
  const dtmm::Draw* rep = nullptr;
  for (const auto& d : chain.draws)
    if (d.g == cls) {
      rep = &d;
      break;
    }
  auto grid = header.config.make_grid();
  auto ce = dtmm::centroids(table, tree, cls, rep->s, grid);
  dtmm::write_centroids_json((fs::path(out_dir) / "centroids.json").string(),
                             ce, table.otu_ids, grid.tau);
  dtmm::write_importance_csv((fs::path(out_dir) / "importance.csv").string(),
                             table, cls, raw_importance);
  std::cout << "summarize: C_LS from t=" << t_ls << ", "
            << ce.composition.size() << " clusters\n";
  return 0;
}

std::vector<int> labels_for_table(const std::string& path,
                                  const dtmm::OtuTable& table) {
  auto pairs = dtmm::read_labels_csv(path);
  std::vector<int> labels(table.n_samples());
  for (int i = 0; i < table.n_samples(); ++i) {
    bool found = false;
    for (const auto& [id, lab] : pairs)
      if (id == table.sample_ids[i]) {
        labels[i] = lab;
        found = true;
        break;
      }
    if (!found)
      throw std::runtime_error("labels file lacks sample '" +
                               table.sample_ids[i] + "'");
  }
  return labels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet-tree multinomial mixtures"};
  app.require_subcommand(1);

  // fit
  FitOptions fit;
  auto* cmd_fit = app.add_subcommand("fit", "Run the collapsed Gibbs sampler");
  cmd_fit->add_option("--table", fit.table_path, "OTU count table (TSV/CSV)")
      ->required();
  cmd_fit->add_option("--tree", fit.tree_path, "Newick tree")->required();
  cmd_fit->add_option("--out", fit.out_dir, "Output directory")->required();
  cmd_fit->add_option("--chains", fit.chains, "Independent chains");
  cmd_fit->add_option("--min-row-total", fit.min_row_total,
                      "Drop samples with fewer total counts");
  cmd_fit->add_flag("--resolve-multifurcations", fit.resolve_multifurcations,
                    "Binarize multifurcating input trees left-deep");
  cmd_fit->add_flag("--raw-importance", fit.raw_importance,
                    "Score OTU importance on raw counts instead of relative "
                    "abundance");
  cmd_fit->add_option("--checkpoint", fit.checkpoint_path, "Checkpoint file");
  cmd_fit->add_option("--checkpoint-every", fit.checkpoint_every,
                      "Snapshot every N iterations");
  cmd_fit->add_option("--resume", fit.resume_path, "Resume from checkpoint");
  add_prior_flags(cmd_fit, fit.config);

  // simulate
  std::string sim_scenario = "II", sim_level = "M", sim_out = "sim";
  bool sim_null = false;
  int sim_n = 90;
  std::uint64_t sim_seed = 0;
  double sim_m = 15000, sim_s = 20;
  auto* cmd_sim = app.add_subcommand("simulate", "Generate a scenario dataset");
  cmd_sim->add_option("--scenario", sim_scenario, "I, II, III, IV or V");
  cmd_sim->add_option("--level", sim_level, "W, M or S");
  cmd_sim->add_flag("--null", sim_null, "Single-cluster null case");
  cmd_sim->add_option("--n", sim_n, "Number of samples");
  cmd_sim->add_option("--seed", sim_seed, "RNG seed");
  cmd_sim->add_option("--total-mean", sim_m, "Negative-binomial mean");
  cmd_sim->add_option("--total-disp", sim_s, "Negative-binomial dispersion");
  cmd_sim->add_option("--out", sim_out, "Output directory")->required();

  // summarize
  std::string sum_chain, sum_table, sum_tree, sum_out;
  int sum_threads = 0;
  bool sum_raw_importance = false;
  auto* cmd_sum =
      app.add_subcommand("summarize", "Re-derive summaries from a chain file");
  cmd_sum->add_option("--chain", sum_chain, "chain.jsonl")->required();
  cmd_sum->add_option("--table", sum_table, "OTU table")->required();
  cmd_sum->add_option("--tree", sum_tree, "Newick tree")->required();
  cmd_sum->add_option("--out", sum_out, "Output directory")->required();
  cmd_sum->add_option("--threads", sum_threads, "Worker threads");
  cmd_sum->add_flag("--raw-importance", sum_raw_importance,
                    "Score OTU importance on raw counts");

  // classify
  auto* cmd_cls = app.add_subcommand("classify", "Supervised classification");
  cmd_cls->require_subcommand(1);
  std::string cls_table, cls_labels, cls_tree, cls_model, cls_out;
  double cls_lambda0 = 0.5;
  dtmm::PriorConfig cls_prior;
  auto* cmd_train = cmd_cls->add_subcommand("train", "Train a classifier");
  cmd_train->add_option("--table", cls_table, "Training OTU table")->required();
  cmd_train->add_option("--labels", cls_labels, "Class labels CSV")->required();
  cmd_train->add_option("--tree", cls_tree, "Newick tree")->required();
  cmd_train->add_option("--out", cls_model, "Model JSON path")->required();
  cmd_train->add_option("--lambda0", cls_lambda0,
                        "Per-node activation prior probability");
  cmd_train->add_option("--theta0", cls_prior.theta0, "Prior mean");
  cmd_train->add_option("--nu0", cls_prior.nu0, "Prior concentration");
  cmd_train->add_option("--grid-theta", cls_prior.n_theta, "Quadrature size");
  cmd_train->add_option("--tau-grid", [&cls_prior](const std::vector<std::string>& vals) {
        auto parts = parse_double_list(vals.at(0));
        if (parts.size() != 3) return false;
        cls_prior.tau_log10_min = parts[0];
        cls_prior.tau_log10_max = parts[1];
        cls_prior.tau_log10_step = parts[2];
        return true;
      },
      "Dispersion support as log10 'min,max,step'");
  auto* cmd_pred = cmd_cls->add_subcommand("predict", "Class posteriors");
  cmd_pred->add_option("--model", cls_model, "Model JSON path")->required();
  cmd_pred->add_option("--table", cls_table, "Query OTU table")->required();
  cmd_pred->add_option("--out", cls_out, "Predictions CSV")->required();

  // transform
  std::string tr_tree, tr_comp, tr_theta;
  bool tr_node_table = false;
  auto* cmd_tr = app.add_subcommand(
      "transform", "Tree-ratio transform and its inverse");
  cmd_tr->add_option("--tree", tr_tree, "Newick tree")->required();
  cmd_tr->add_option("--comp", tr_comp, "Composition 'p1,p2,...' to transform");
  cmd_tr->add_option("--theta", tr_theta,
                     "Branching probabilities to invert (canonical order)");
  cmd_tr->add_flag("--node-table", tr_node_table,
                   "Print the canonical node membership table");

  // eval
  std::string ev_labels, ev_truth, ev_table;
  auto* cmd_ev = app.add_subcommand("eval", "Clustering metrics");
  cmd_ev->add_option("--labels", ev_labels, "Labels CSV")->required();
  cmd_ev->add_option("--truth", ev_truth, "Reference labels CSV")->required();
  cmd_ev->add_option("--table", ev_table, "OTU table for R^2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  fit.iters_given = cmd_fit->count("--iters") > 0;
  fit.burnin_given = cmd_fit->count("--burnin") > 0;

  try {
    if (*cmd_fit) return run_fit(fit);
    if (*cmd_sim)
      return run_simulate(sim_scenario, sim_level, sim_null, sim_n, sim_seed,
                          sim_m, sim_s, sim_out);
    if (*cmd_sum)
      return run_summarize(sum_chain, sum_table, sum_tree, sum_out,
                           sum_threads, sum_raw_importance);
    if (*cmd_cls) {
      if (*cmd_train) {
        auto tree = load_tree(cls_tree, false);
        auto table = dtmm::read_otu_table(cls_table).matched_to_tree(tree);
        auto labels = labels_for_table(cls_labels, table);
        auto model = dtmm::ClassifierModel::train(table, labels, tree,
                                                  cls_prior, cls_lambda0);
        std::ofstream out(cls_model);
        if (!out) throw std::runtime_error("cannot write " + cls_model);
        out << model.to_json() << '\n';
        std::cout << "classify train: " << model.class_labels().size()
                  << " classes\n";
      } else {
        auto model = dtmm::ClassifierModel::from_json(read_file(cls_model));
        auto table =
            dtmm::read_otu_table(cls_table).matched_to_tree(model.tree());
        std::ofstream out(cls_out);
        if (!out) throw std::runtime_error("cannot write " + cls_out);
        out << "sample";
        for (int lab : model.class_labels()) out << ",class" << lab;
        out << '\n';
        for (int i = 0; i < table.n_samples(); ++i) {
          auto row = table.row(i);
          auto post = model.predict(row);
          out << table.sample_ids[i];
          for (double p : post) out << ',' << fmt12(p);
          out << '\n';
        }
        std::cout << "classify predict: " << table.n_samples() << " samples\n";
      }
      return 0;
    }
    if (*cmd_tr) {
      auto tree = load_tree(tr_tree, false);
      if (tr_node_table) {
        std::cout << tree.node_table();
        return 0;
      }
      if (!tr_comp.empty()) {
        auto p = parse_double_list(tr_comp);
        auto theta = dtmm::tree_ratio_transform(tree, p);
        std::cout << "node,theta\n";
        for (std::size_t k = 0; k < theta.size(); ++k)
          std::cout << k << ',' << fmt12(theta[k]) << '\n';
        return 0;
      }
      if (!tr_theta.empty()) {
        auto theta = parse_double_list(tr_theta);
        auto p = dtmm::inverse_tree_ratio_transform(tree, theta);
        std::cout << "leaf,p\n";
        for (std::size_t j = 0; j < p.size(); ++j)
          std::cout << tree.leaf_ids()[j] << ',' << fmt12(p[j]) << '\n';
        return 0;
      }
      throw std::runtime_error("transform: need --comp, --theta or --node-table");
    }
    if (*cmd_ev) {
      auto a = dtmm::read_labels_csv(ev_labels);
      auto b = dtmm::read_labels_csv(ev_truth);
      if (a.size() != b.size())
        throw std::runtime_error("eval: label files differ in length");
      std::vector<int> la, lb;
      for (const auto& [id, lab] : b) {
        lb.push_back(lab);
        bool found = false;
        for (const auto& [id2, lab2] : a)
          if (id2 == id) {
            la.push_back(lab2);
            found = true;
            break;
          }
        if (!found)
          throw std::runtime_error("eval: sample '" + id +
                                   "' missing from labels file");
      }
      double j = dtmm::jaccard_index(la, lb);
      std::cout << "jaccard=" << fmt12(j) << '\n';
      std::cout << "rmse=" << fmt12(std::abs(j - 1.0)) << '\n';
      if (!ev_table.empty()) {
        auto table = dtmm::read_otu_table(ev_table);
        auto labels = labels_for_table(ev_labels, table);
        std::cout << "r_squared=" << fmt12(dtmm::r_squared(table, labels))
                  << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
