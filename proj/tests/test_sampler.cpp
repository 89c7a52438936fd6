#include <doctest.h>

#include <stdexcept>
#include <cmath>
#include <set>

#include "dtmm/sampler.hpp"
#include "dtmm/simgen.hpp"
#include "support/geweke.hpp"

using namespace dtmm;

namespace {

OtuTable make_table(const std::vector<std::vector<std::int64_t>>& rows,
                    const std::vector<std::string>& otu_ids) {
  OtuTable t;
  t.otu_ids = otu_ids;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.sample_ids.push_back("s" + std::to_string(i + 1));
    t.counts.insert(t.counts.end(), rows[i].begin(), rows[i].end());
  }
  return t;
}

PriorConfig small_config() {
  PriorConfig c;
  c.iterations = 20;
  c.burnin = 10;
  c.init_clusters = 2;
  return c;
}

}  // namespace

TEST_CASE("gamma prior") {
  std::vector<std::uint8_t> none(5, 0);
  CHECK(gamma_prior_log_prob(none, 6) ==
        doctest::Approx(std::log(1.0 / 6)).epsilon(1e-14));
  std::vector<std::uint8_t> two{1, 1, 0, 0, 0};
  CHECK(gamma_prior_log_prob(two, 6) ==
        doctest::Approx(std::log(1.0 / 60)).epsilon(1e-14));
  for (int m = 2; m <= 12; ++m) {
    double total = 0;
    for (std::uint32_t mask = 0; mask < (1u << (m - 1)); ++mask) {
      std::vector<std::uint8_t> bits(m - 1);
      for (int k = 0; k < m - 1; ++k) bits[k] = (mask >> k) & 1u;
      total += std::exp(gamma_prior_log_prob(bits, m));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("derived actual labels and activations") {
  std::vector<int> g;
  std::vector<std::uint8_t> s;
  derive_actual({1, 2, 1}, {0, 0, 0}, g, s);
  CHECK(g == std::vector<int>{1, 1, 1});
  CHECK(s == std::vector<std::uint8_t>{0, 0, 0});
  derive_actual({1, 1, 1}, {1, 0, 1}, g, s);
  CHECK(g == std::vector<int>{1, 1, 1});
  CHECK(s == std::vector<std::uint8_t>{0, 0, 0});
  derive_actual({1, 2, 1}, {1, 0, 0}, g, s);
  CHECK(g == std::vector<int>{1, 2, 1});
  CHECK(s == std::vector<std::uint8_t>{1, 0, 0});
}

TEST_CASE("k-medoids") {
  SUBCASE("k equal to n isolates every sample") {
    auto table = make_table({{10, 0}, {0, 10}, {5, 5}}, {"a", "b"});
    auto labels = init_labels(table, 3);
    std::set<int> distinct(labels.begin(), labels.end());
    CHECK(distinct.size() == 3);
  }
  SUBCASE("k = 1 puts everything together") {
    auto table = make_table({{10, 0}, {0, 10}, {5, 5}}, {"a", "b"});
    auto labels = init_labels(table, 1);
    for (int l : labels) CHECK(l == labels[0]);
  }
  SUBCASE("two identical blocks split exactly") {
    std::vector<std::vector<std::int64_t>> rows;
    for (int i = 0; i < 4; ++i) rows.push_back({20, 0, 0});
    for (int i = 0; i < 4; ++i) rows.push_back({0, 0, 20});
    auto table = make_table(rows, {"a", "b", "c"});
    auto labels = init_labels(table, 2);
    for (int i = 1; i < 4; ++i) CHECK(labels[i] == labels[0]);
    for (int i = 5; i < 8; ++i) CHECK(labels[i] == labels[4]);
    CHECK(labels[0] != labels[4]);
  }
}

TEST_CASE("update_gamma activation frequencies") {
  // Tree (A,B) nested in a 4-leaf tree where node {C,D} never sees counts:
  // its Bayes factor is 1, so activation happens with probability lambda.
  auto tree = parse_newick("((A,B),(C,D));");
  auto table = make_table(
      {{30, 10, 0, 0}, {5, 25, 0, 0}, {18, 2, 0, 0}, {1, 19, 0, 0}},
      {"A", "B", "C", "D"});
  PriorConfig config = small_config();
  GibbsSampler sampler(table, tree, config);
  auto rng = make_rng(61);
  sampler.set_state({0, 0, 1, 1}, {1, 1, 1}, 1.0, 0.37);

  const int rounds = 10000;
  int active_dead_node = 0;
  for (int r = 0; r < rounds; ++r) {
    sampler.update_gamma(rng);
    // Node index 2 is the {C,D} split (canonical order: root, {A,B}, {C,D}).
    active_dead_node += sampler.gamma()[2] ? 1 : 0;
  }
  double freq = static_cast<double>(active_dead_node) / rounds;
  double se = std::sqrt(0.37 * 0.63 / rounds);
  CHECK(std::abs(freq - 0.37) < 3 * se);
}

TEST_CASE("update_gamma with a single cluster reduces to the prior") {
  auto tree = parse_newick("(A,B);");
  auto table = make_table({{30, 10}, {5, 25}, {18, 2}}, {"A", "B"});
  PriorConfig config = small_config();
  GibbsSampler sampler(table, tree, config);
  auto rng = make_rng(62);
  sampler.set_state({0, 0, 0}, {1}, 1.0, 0.42);
  const int rounds = 10000;
  int active = 0;
  for (int r = 0; r < rounds; ++r) {
    sampler.update_gamma(rng);
    active += sampler.gamma()[0] ? 1 : 0;
  }
  double freq = static_cast<double>(active) / rounds;
  double se = std::sqrt(0.42 * 0.58 / rounds);
  CHECK(std::abs(freq - 0.42) < 3 * se);
}

TEST_CASE("update_gamma detects well-separated clusters") {
  auto tree = parse_newick("(A,B);");
  std::vector<std::vector<std::int64_t>> rows;
  for (int i = 0; i < 20; ++i) rows.push_back({45, 5});
  for (int i = 0; i < 20; ++i) rows.push_back({5, 45});
  auto table = make_table(rows, {"A", "B"});
  PriorConfig config = small_config();
  GibbsSampler sampler(table, tree, config);
  auto rng = make_rng(63);
  std::vector<int> labels(40, 0);
  for (int i = 20; i < 40; ++i) labels[i] = 1;
  int active = 0;
  const int rounds = 1000;
  for (int r = 0; r < rounds; ++r) {
    sampler.set_state(labels, {1}, 1.0, 0.5);
    sampler.update_gamma(rng);
    active += sampler.gamma()[0] ? 1 : 0;
  }
  CHECK(static_cast<double>(active) / rounds > 0.98);
}

TEST_CASE("update_labels reduces to the CRP prior when nothing is active") {
  auto tree = parse_newick("(A,B);");
  auto table = make_table({{10, 5}, {200, 3}}, {"A", "B"});
  PriorConfig config = small_config();
  GibbsSampler sampler(table, tree, config);
  auto rng = make_rng(64);
  // After a sweep the final co-clustering indicator is Bernoulli(1/2)
  // whatever the data, since the last update sees weights (1, beta=1).
  int together = 0;
  const int rounds = 10000;
  for (int r = 0; r < rounds; ++r) {
    sampler.set_state({0, 1}, {0}, 1.0, 0.5);
    sampler.update_labels(rng);
    together += sampler.k_star() == 1 ? 1 : 0;
  }
  double freq = static_cast<double>(together) / rounds;
  double se = std::sqrt(0.25 / rounds);
  CHECK(std::abs(freq - 0.5) < 3 * se);
}

TEST_CASE("a sample joins the cluster it matches") {
  auto tree = parse_newick("(A,B);");
  std::vector<std::vector<std::int64_t>> rows;
  rows.push_back({45, 5});  // the sample under test
  for (int i = 0; i < 20; ++i) rows.push_back({45, 5});
  for (int i = 0; i < 20; ++i) rows.push_back({5, 45});
  auto table = make_table(rows, {"A", "B"});
  PriorConfig config = small_config();
  GibbsSampler sampler(table, tree, config);
  auto rng = make_rng(65);
  std::vector<int> labels(41);
  labels[0] = 0;
  for (int i = 1; i <= 20; ++i) labels[i] = 0;
  for (int i = 21; i <= 40; ++i) labels[i] = 1;
  int joined = 0;
  const int rounds = 400;
  for (int r = 0; r < rounds; ++r) {
    sampler.set_state(labels, {1}, 1.0, 0.5);
    sampler.update_labels(rng);
    auto out = sampler.labels();
    joined += out[0] == out[1] ? 1 : 0;
  }
  CHECK(static_cast<double>(joined) / rounds > 0.95);
}

TEST_CASE("update_beta") {
  auto tree = parse_newick("(A,B);");
  PriorConfig config = small_config();
  SUBCASE("single sample, single cluster: posterior uniform on the grid") {
    auto table = make_table({{10, 5}}, {"A", "B"});
    GibbsSampler sampler(table, tree, config);
    auto rng = make_rng(66);
    sampler.set_state({0}, {1}, 1.0, 0.5);
    const int rounds = 20000;
    double mean_b = 0;
    int low = 0;
    for (int r = 0; r < rounds; ++r) {
      sampler.update_beta(rng);
      double b = sampler.beta() / (1.0 + sampler.beta());
      CHECK(std::isfinite(sampler.beta()));
      CHECK(sampler.beta() > 0);
      mean_b += b;
      low += b < 0.25 ? 1 : 0;
    }
    mean_b /= rounds;
    double se_mean = std::sqrt(1.0 / 12 / rounds);
    CHECK(std::abs(mean_b - 0.5) < 3 * se_mean);
    double se_low = std::sqrt(0.25 * 0.75 / rounds);
    CHECK(std::abs(static_cast<double>(low) / rounds - 0.25) < 3 * se_low + 1e-3);
  }
  SUBCASE("more clusters push beta up") {
    std::vector<std::vector<std::int64_t>> rows(20, {10, 5});
    auto table = make_table(rows, {"A", "B"});
    GibbsSampler sampler(table, tree, config);
    auto rng = make_rng(67);
    auto mean_beta_for = [&](const std::vector<int>& labels) {
      sampler.set_state(labels, {1}, 1.0, 0.5);
      double mean = 0;
      const int rounds = 10000;
      for (int r = 0; r < rounds; ++r) {
        sampler.update_beta(rng);
        mean += std::min(sampler.beta(), 1e3);
      }
      return mean / rounds;
    };
    std::vector<int> one(20, 0);
    std::vector<int> five(20);
    for (int i = 0; i < 20; ++i) five[i] = i % 5;
    CHECK(mean_beta_for(five) > mean_beta_for(one));
  }
}

TEST_CASE("update_lambda conjugacy") {
  auto tree = parse_newick("((A,B),((C,D),(E,F)));");
  REQUIRE(tree.num_internal() == 5);
  std::vector<std::vector<std::int64_t>> rows(3, {1, 2, 3, 4, 5, 6});
  auto table = make_table(rows, {"A", "B", "C", "D", "E", "F"});
  PriorConfig config = small_config();
  GibbsSampler sampler(table, tree, config);
  auto rng = make_rng(68);

  auto empirical_mean = [&](const std::vector<std::uint8_t>& gamma) {
    sampler.set_state({0, 0, 0}, gamma, 1.0, 0.5);
    double mean = 0;
    const int rounds = 100000;
    for (int r = 0; r < rounds; ++r) {
      sampler.update_lambda(rng);
      mean += sampler.lambda();
    }
    return mean / rounds;
  };
  // All active: Beta(6,1), mean 6/7; none active: Beta(1,6), mean 1/7.
  double se = std::sqrt(6.0 / (49 * 8) / 100000);
  CHECK(std::abs(empirical_mean({1, 1, 1, 1, 1}) - 6.0 / 7) < 3 * se);
  CHECK(std::abs(empirical_mean({0, 0, 0, 0, 0}) - 1.0 / 7) < 3 * se);
}

TEST_CASE("gibbs_run basics") {
  auto tree = parse_newick("(A,B);");
  PriorConfig config = small_config();
  config.init_clusters = 1;
  SUBCASE("single sample always stays in one cluster") {
    auto table = make_table({{10, 5}}, {"A", "B"});
    auto rng = make_rng(69);
    auto chain = gibbs_run(table, tree, config, rng);
    CHECK(chain.draws.size() == 10);
    CHECK(chain.trace.size() == 20);
    for (const auto& d : chain.draws) {
      CHECK(d.c == std::vector<int>{1});
      CHECK(d.g == std::vector<int>{1});
    }
  }
  SUBCASE("bad iteration budget is rejected") {
    PriorConfig bad = config;
    bad.burnin = bad.iterations;
    auto table = make_table({{10, 5}}, {"A", "B"});
    auto rng = make_rng(70);
    CHECK_THROWS_AS(gibbs_run(table, tree, bad, rng), std::invalid_argument);
  }
  SUBCASE("dimension mismatch is rejected") {
    auto table = make_table({{10, 5}}, {"A", "X"});
    auto rng = make_rng(70);
    CHECK_THROWS_AS(gibbs_run(table, tree, config, rng), std::invalid_argument);
  }
}

TEST_CASE("deterministic replay") {
  auto sim_rng = make_rng(71);
  ScenarioConfig sc;
  sc.scenario = Scenario::II;
  sc.level = SignalLevel::Strong;
  sc.n = 12;
  auto sim = generate(sc, sim_rng);
  PriorConfig config = small_config();
  config.iterations = 30;
  config.burnin = 15;
  auto run_once = [&]() {
    auto rng = make_rng(999);
    return gibbs_run(sim.table, six_leaf_tree(), config, rng);
  };
  auto a = run_once();
  auto b = run_once();
  REQUIRE(a.draws.size() == b.draws.size());
  for (std::size_t t = 0; t < a.draws.size(); ++t) {
    CHECK(a.draws[t].c == b.draws[t].c);
    CHECK(a.draws[t].gamma == b.draws[t].gamma);
    CHECK(a.draws[t].beta == b.draws[t].beta);
    CHECK(a.draws[t].lambda == b.draws[t].lambda);
  }
}

TEST_CASE("chain invariants on a small run") {
  auto sim_rng = make_rng(72);
  ScenarioConfig sc;
  sc.scenario = Scenario::I;
  sc.level = SignalLevel::Strong;
  sc.n = 15;
  auto sim = generate(sc, sim_rng);
  PriorConfig config;
  config.iterations = 60;
  config.burnin = 30;
  config.init_clusters = 3;
  auto rng = make_rng(73);
  auto chain = gibbs_run(sim.table, six_leaf_tree(), config, rng);
  for (const auto& d : chain.draws) {
    // Labels contiguous from 1 by first appearance.
    int seen_max = 0;
    for (int v : d.c) {
      CHECK(v >= 1);
      CHECK(v <= seen_max + 1);
      seen_max = std::max(seen_max, v);
    }
    // g/s transform.
    bool any_gamma = false;
    for (auto g : d.gamma) any_gamma = any_gamma || g;
    bool single = true;
    for (int v : d.c) single = single && v == d.c[0];
    if (!any_gamma || single) {
      for (int v : d.g) CHECK(v == 1);
      for (auto v : d.s) CHECK(v == 0);
    } else {
      CHECK(d.g == d.c);
      CHECK(d.s == d.gamma);
    }
  }
}

TEST_CASE("geweke joint-distribution check (reduced)") {
  testing::GewekeSetup setup;
  setup.tree = parse_newick("((a,b),(c,d));");
  setup.prior = PriorConfig{};
  setup.prior.iterations = 2;
  setup.prior.burnin = 1;
  setup.totals.assign(6, 20);
  auto result = testing::run_geweke(setup, 3000, 5, 74);
  CHECK(result.p_value > 0.001);
}
