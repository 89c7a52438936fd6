#include <doctest.h>

#include <stdexcept>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dtmm/chain_io.hpp"
#include "dtmm/otu_table.hpp"
#include "dtmm/simgen.hpp"
#include "dtmm/summaries.hpp"

using namespace dtmm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dtmm_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("otu table parsing") {
  SUBCASE("tsv with header round-trips") {
    auto t = parse_otu_table("sample\tx\ty\ns1\t1\t2\ns2\t3\t4\n", "mem");
    CHECK(t.n_samples() == 2);
    CHECK(t.n_otus() == 2);
    CHECK(t.row(0)[0] == 1);
    CHECK(t.row(1)[1] == 4);
    CHECK(t.total(1) == 7);
    TempDir dir;
    write_otu_table(t, dir.file("t.tsv"));
    auto back = read_otu_table(dir.file("t.tsv"));
    CHECK(back.sample_ids == t.sample_ids);
    CHECK(back.otu_ids == t.otu_ids);
    CHECK(back.counts == t.counts);
  }
  SUBCASE("csv is sniffed") {
    auto t = parse_otu_table("sample,x,y\ns1,5,6\n", "mem");
    CHECK(t.row(0)[1] == 6);
  }
  SUBCASE("errors carry line numbers") {
    CHECK_THROWS_WITH_AS(parse_otu_table("sample\tx\ty\ns1\t1\n", "mem"),
                         doctest::Contains("mem:2"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_otu_table("sample\tx\ty\ns1\t1\t-2\n", "mem"),
                         doctest::Contains("negative"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_otu_table("sample\tx\ty\ns1\t1\tz\n", "mem"),
                         doctest::Contains("not a nonnegative integer"),
                         std::runtime_error);
    CHECK_THROWS_AS(parse_otu_table("sample\tx\tx\ns1\t1\t2\n", "mem"),
                    std::runtime_error);
    CHECK_THROWS_AS(parse_otu_table("sample\tx\ty\ns1\t1\t2\ns1\t3\t4\n", "mem"),
                    std::runtime_error);
  }
  SUBCASE("tree matching reorders columns and names mismatches") {
    auto tree = parse_newick("((b,a),c);");
    auto t = parse_otu_table("sample\ta\tb\tc\ns1\t1\t2\t3\n", "mem");
    auto matched = t.matched_to_tree(tree);
    CHECK(matched.otu_ids == std::vector<std::string>{"b", "a", "c"});
    CHECK(matched.row(0)[0] == 2);
    CHECK(matched.row(0)[1] == 1);
    auto bad = parse_otu_table("sample\ta\tz\ns1\t1\t2\n", "mem");
    CHECK_THROWS_WITH_AS(bad.matched_to_tree(tree), doctest::Contains("z"),
                         std::runtime_error);
  }
  SUBCASE("row filtering") {
    auto t = parse_otu_table("sample\tx\ty\ns1\t1\t2\ns2\t30\t40\n", "mem");
    auto kept = t.filtered(10);
    CHECK(kept.n_samples() == 1);
    CHECK(kept.sample_ids == std::vector<std::string>{"s2"});
  }
}

TEST_CASE("chain file round trip preserves summaries") {
  ScenarioConfig sc;
  sc.scenario = Scenario::II;
  sc.level = SignalLevel::Strong;
  sc.n = 12;
  auto rng = make_rng(101);
  auto sim = generate(sc, rng);
  PriorConfig config;
  config.iterations = 40;
  config.burnin = 20;
  config.init_clusters = 3;
  auto chain_rng = make_rng(102);
  auto chain = gibbs_run(sim.table, six_leaf_tree(), config, chain_rng);

  TempDir dir;
  ChainHeader header;
  header.tree_hash = tree_hash(six_leaf_tree());
  header.data_hash = data_hash(sim.table);
  header.n = sim.table.n_samples();
  header.n_leaves = 6;
  header.sample_ids = sim.table.sample_ids;
  header.config = config;
  write_chain(dir.file("chain.jsonl"), header, {chain});
  auto [header2, chain2] = read_chain(dir.file("chain.jsonl"));

  CHECK(header2.tree_hash == header.tree_hash);
  CHECK(header2.data_hash == header.data_hash);
  CHECK(header2.config.iterations == config.iterations);
  CHECK(header2.config.seed == config.seed);
  REQUIRE(chain2.draws.size() == chain.draws.size());
  for (std::size_t t = 0; t < chain.draws.size(); ++t) {
    CHECK(chain2.draws[t].c == chain.draws[t].c);
    CHECK(chain2.draws[t].gamma == chain.draws[t].gamma);
    CHECK(chain2.draws[t].g == chain.draws[t].g);
    CHECK(chain2.draws[t].s == chain.draws[t].s);
    CHECK(chain2.draws[t].beta == chain.draws[t].beta);
    CHECK(chain2.draws[t].lambda == chain.draws[t].lambda);
  }

  // Summaries computed from the reloaded chain are identical.
  auto pi1 = coclustering(chain);
  auto pi2 = coclustering(chain2);
  CHECK(pi1.values == pi2.values);
  auto ls1 = least_squares_clustering(chain, pi1);
  auto ls2 = least_squares_clustering(chain2, pi2);
  CHECK(ls1.first == ls2.first);
  CHECK(ls1.second == ls2.second);
  CHECK(activation_means(chain) == activation_means(chain2));
}

TEST_CASE("checkpoint round trip and resumed determinism") {
  ScenarioConfig sc;
  sc.scenario = Scenario::I;
  sc.level = SignalLevel::Strong;
  sc.n = 10;
  auto rng = make_rng(103);
  auto sim = generate(sc, rng);
  PriorConfig config;
  config.iterations = 30;
  config.burnin = 10;
  config.init_clusters = 2;

  // Reference: a single uninterrupted run.
  PosteriorChain full;
  {
    GibbsSampler sampler(sim.table, six_leaf_tree(), config);
    auto r = make_rng(104);
    sampler.init(r);
    sampler.run(r, full);
  }

  // Interrupted at iteration 17, serialized, resumed.
  TempDir dir;
  PosteriorChain part1, part2;
  {
    GibbsSampler sampler(sim.table, six_leaf_tree(), config);
    auto r = make_rng(104);
    sampler.init(r);
    for (int t = 1; t <= 17; ++t) {
      sampler.sweep(r);
      if (t > config.burnin) {
        Draw d;
        d.t = t;
        d.c = sampler.labels();
        for (int& v : d.c) ++v;
        d.gamma = sampler.gamma();
        d.beta = sampler.beta();
        d.lambda = sampler.lambda();
        derive_actual(d.c, d.gamma, d.g, d.s);
        part1.draws.push_back(std::move(d));
      }
    }
    Checkpoint ck;
    ck.next_iteration = 18;
    ck.labels = sampler.labels();
    for (int& v : ck.labels) ++v;
    ck.gamma = sampler.gamma();
    ck.beta = sampler.beta();
    ck.lambda = sampler.lambda();
    ck.rng_state = rng_state_string(r);
    ck.tree_hash = tree_hash(six_leaf_tree());
    ck.data_hash = data_hash(sim.table);
    ck.config = config;
    write_checkpoint(dir.file("ck.json"), ck);
  }
  {
    auto ck = read_checkpoint(dir.file("ck.json"));
    CHECK(ck.next_iteration == 18);
    GibbsSampler sampler(sim.table, six_leaf_tree(), ck.config);
    std::vector<int> labels0 = ck.labels;
    for (int& v : labels0) --v;
    sampler.set_state(labels0, ck.gamma, ck.beta, ck.lambda);
    auto r = rng_from_state(ck.rng_state);
    sampler.run(r, part2, ck.next_iteration);
  }
  std::vector<Draw> combined = part1.draws;
  combined.insert(combined.end(), part2.draws.begin(), part2.draws.end());
  REQUIRE(combined.size() == full.draws.size());
  for (std::size_t t = 0; t < combined.size(); ++t) {
    CHECK(combined[t].c == full.draws[t].c);
    CHECK(combined[t].gamma == full.draws[t].gamma);
    CHECK(combined[t].beta == full.draws[t].beta);
    CHECK(combined[t].lambda == full.draws[t].lambda);
  }
}

TEST_CASE("labels csv round trip") {
  TempDir dir;
  write_labels_csv(dir.file("l.csv"), {"s1", "s2"}, {1, 2});
  auto pairs = read_labels_csv(dir.file("l.csv"));
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::pair<std::string, int>{"s1", 1});
  CHECK(pairs[1] == std::pair<std::string, int>{"s2", 2});
}

TEST_CASE("bundled scenario fixture loads with the recorded totals") {
  auto table = read_otu_table(std::string(DTMM_TEST_DIR) +
                              "/fixtures/scenario2.tsv");
  auto labels = read_labels_csv(std::string(DTMM_TEST_DIR) +
                                "/fixtures/scenario2_labels.csv");
  REQUIRE(table.n_samples() == 12);
  REQUIRE(labels.size() == 12);
  const std::int64_t expected[12] = {10179, 11466, 20247, 12747, 19355, 15978,
                                     13116, 19021, 14957, 11747, 14134, 16022};
  for (int i = 0; i < 12; ++i) {
    CHECK(table.total(i) == expected[i]);
    CHECK(labels[i].first == table.sample_ids[i]);
  }
  CHECK_NOTHROW(table.matched_to_tree(six_leaf_tree()));
}

TEST_CASE("dt params json round trip") {
  DtParams p{{0.25, 0.5, 0.75}, {2.0, 11.5, 0.1}};
  auto back = dt_params_from_json(dt_params_json(p));
  CHECK(back.mean_branch == p.mean_branch);
  CHECK(back.dispersion == p.dispersion);
}

TEST_CASE("hashes change with content") {
  OtuTable a = parse_otu_table("sample\tx\ty\ns1\t1\t2\n", "mem");
  OtuTable b = parse_otu_table("sample\tx\ty\ns1\t1\t3\n", "mem");
  CHECK(data_hash(a) != data_hash(b));
  CHECK(tree_hash(parse_newick("(a,b);")) != tree_hash(parse_newick("(a,c);")));
}
