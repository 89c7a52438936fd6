#include <doctest.h>

#include <stdexcept>
#include <cmath>

#include "dtmm/marginal.hpp"
#include "dtmm/rng.hpp"
#include "dtmm/special.hpp"

using namespace dtmm;

namespace {

// Independent oracle: beta-binomial via rising-factorial products instead
// of lgamma differences.
double log_bb_product_form(std::int64_t yl, std::int64_t y, double theta,
                           double tau) {
  double a = theta * tau, b = (1 - theta) * tau;
  double out = log_choose(y, yl);
  for (std::int64_t i = 0; i < yl; ++i) out += std::log(a + i);
  for (std::int64_t i = 0; i < y - yl; ++i) out += std::log(b + i);
  for (std::int64_t i = 0; i < y; ++i) out -= std::log(tau + i);
  return out;
}

std::vector<NodeStat> random_stats(Rng& rng, int max_size = 10,
                                   std::int64_t max_count = 50) {
  int size = 1 + static_cast<int>(runif(rng) * max_size);
  std::vector<NodeStat> stats(size);
  for (auto& s : stats) {
    s.y_total = static_cast<std::int64_t>(runif(rng) * (max_count + 1));
    s.y_left = s.y_total > 0
                   ? static_cast<std::int64_t>(runif(rng) * (s.y_total + 1))
                   : 0;
    s.y_left = std::min(s.y_left, s.y_total);
  }
  return stats;
}

// Monte Carlo estimate of the active-node marginal with its log-scale
// standard error.
std::pair<double, double> mc_log_marginal(std::span<const NodeStat> stats,
                                          double theta0, double nu0,
                                          const std::vector<double>& tau,
                                          int n_draws, Rng& rng) {
  double mean = 0, m2 = 0;
  for (int d = 1; d <= n_draws; ++d) {
    double theta = rbeta(theta0 * nu0, (1 - theta0) * nu0, rng);
    double t = tau[static_cast<std::size_t>(runif(rng) * tau.size())];
    double logw = 0;
    for (const auto& s : stats)
      logw += s.y_total ? log_beta_binomial(s.y_left, s.y_total, theta, t) : 0.0;
    double w = std::exp(logw);
    double delta = w - mean;
    mean += delta / d;
    m2 += delta * (w - mean);
  }
  double sd = std::sqrt(m2 / n_draws);
  return {std::log(mean), sd / mean / std::sqrt(static_cast<double>(n_draws))};
}

}  // namespace

TEST_CASE("log_beta_binomial basics") {
  CHECK(log_beta_binomial(0, 0, 0.5, 2.0) == 0.0);
  CHECK(log_beta_binomial(1, 1, 0.5, 2.0) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(log_beta_binomial(3, 10, 0.3, 5.0) ==
        doctest::Approx(log_bb_product_form(3, 10, 0.3, 5.0)).epsilon(1e-12));
  auto rng = make_rng(41);
  for (int rep = 0; rep < 50; ++rep) {
    std::int64_t y = 1 + static_cast<std::int64_t>(runif(rng) * 60);
    std::int64_t yl = static_cast<std::int64_t>(runif(rng) * (y + 1));
    double theta = 0.05 + 0.9 * runif(rng);
    double tau = std::pow(10.0, -1 + 5 * runif(rng));
    CHECK(std::abs(log_beta_binomial(yl, y, theta, tau) -
                   log_bb_product_form(yl, y, theta, tau)) < 1e-10);
  }
  CHECK_THROWS_AS(log_beta_binomial(2, 1, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(log_beta_binomial(0, 1, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(log_beta_binomial(0, 1, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("active marginal closed forms") {
  auto grid = QuadGrid::make(0.5, 1.0);
  SUBCASE("empty set and all-zero counts integrate to one") {
    CHECK(log_marginal_active({}, grid) == doctest::Approx(0.0).epsilon(1e-13));
    std::vector<NodeStat> zeros(5, NodeStat{0, 0});
    CHECK(log_marginal_active(zeros, grid) ==
          doctest::Approx(0.0).epsilon(1e-13));
  }
  SUBCASE("single bernoulli observation gives the prior mean") {
    // One (1,1) member: the integrand is theta for every tau, so the
    // integral is E[theta] = theta0 regardless of the tau support.
    std::vector<NodeStat> one{{1, 1}};
    CHECK(std::abs(log_marginal_active(one, grid) - std::log(0.5)) < 1e-6);
    auto shifted = QuadGrid::make(0.5, 1.0, 64, 1.0, 3.0, 1.0);
    CHECK(std::abs(log_marginal_active(one, shifted) - std::log(0.5)) < 1e-6);
    auto asym = QuadGrid::make(0.3, 2.0, 64);
    CHECK(std::abs(log_marginal_active(one, asym) - std::log(0.3)) < 1e-6);
  }
  SUBCASE("two bernoulli observations, single tau") {
    // Members (1,1) and (0,1) at tau = 1: integrand theta*(1-theta), whose
    // Jeffreys-prior integral is B(3/2,3/2)/B(1/2,1/2) = 1/8.
    auto single_tau = QuadGrid::make(0.5, 1.0, 64, 0.0, 0.0, 0.5);
    REQUIRE(single_tau.n_tau() == 1);
    std::vector<NodeStat> stats{{1, 1}, {0, 1}};
    CHECK(std::abs(log_marginal_active(stats, single_tau) - std::log(0.125)) <
          1e-6);
  }
}

TEST_CASE("inactive marginal") {
  std::vector<NodeStat> stats{{3, 10}, {0, 4}, {7, 7}};
  SUBCASE("empty product is one") {
    CHECK(log_marginal_inactive({}, 0.4, 3.0) == 0.0);
  }
  SUBCASE("single sample reduces to one factor") {
    CHECK(log_marginal_inactive(std::vector<NodeStat>{{3, 10}}, 0.4, 3.0) ==
          doctest::Approx(log_beta_binomial(3, 10, 0.4, 3.0)));
  }
  SUBCASE("additive over disjoint sets") {
    double whole = log_marginal_inactive(stats, 0.4, 3.0);
    double part1 =
        log_marginal_inactive(std::span(stats).subspan(0, 1), 0.4, 3.0);
    double part2 =
        log_marginal_inactive(std::span(stats).subspan(1, 2), 0.4, 3.0);
    CHECK(whole == doctest::Approx(part1 + part2).epsilon(1e-13));
  }
  SUBCASE("integrated form equals the active marginal on the same set") {
    auto grid = QuadGrid::make(0.5, 1.0);
    CHECK(log_marginal_inactive_integrated(stats, grid) ==
          doctest::Approx(log_marginal_active(stats, grid)));
    std::vector<NodeStat> one{{1, 1}};
    CHECK(std::abs(log_marginal_inactive_integrated(one, grid) -
                   std::log(0.5)) < 1e-6);
  }
}

TEST_CASE("quadrature agrees with monte carlo") {
  auto grid = QuadGrid::make(0.5, 1.0);
  auto rng = make_rng(42);
  for (int inst = 0; inst < 6; ++inst) {
    auto stats = random_stats(rng);
    double quad = log_marginal_active(stats, grid);
    auto [mc, se] = mc_log_marginal(stats, 0.5, 1.0, grid.tau, 200000, rng);
    CHECK(std::abs(quad - mc) < 3 * se + 1e-9);
  }
}

TEST_CASE("doubling the theta rule leaves the marginal unchanged") {
  auto grid64 = QuadGrid::make(0.5, 1.0, 64);
  auto grid128 = QuadGrid::make(0.5, 1.0, 128);
  auto rng = make_rng(43);
  for (int inst = 0; inst < 20; ++inst) {
    auto stats = random_stats(rng);
    CHECK(std::abs(log_marginal_active(stats, grid64) -
                   log_marginal_active(stats, grid128)) < 1e-6);
  }
}

TEST_CASE("accumulators") {
  auto grid = QuadGrid::make(0.5, 1.0);
  auto rng = make_rng(44);
  const int n = 8, nodes = 3;
  std::vector<std::vector<NodeStat>> stats(n);
  for (auto& per_sample : stats) {
    per_sample.resize(nodes);
    for (auto& s : per_sample) {
      s.y_total = static_cast<std::int64_t>(runif(rng) * 40);
      s.y_left = static_cast<std::int64_t>(runif(rng) * (s.y_total + 1));
      s.y_left = std::min(s.y_left, s.y_total);
    }
  }
  GridRowTable rows(stats, grid, 1);

  SUBCASE("add then remove restores the cells") {
    AccumulatorSet acc(n, nodes, grid);
    acc.add(0, 0, rows);
    acc.add(1, 0, rows);
    std::vector<double> before(acc.cells(0, 1).begin(), acc.cells(0, 1).end());
    acc.add(2, 0, rows);
    acc.remove(2, rows);
    auto after = acc.cells(0, 1);
    for (int g = 0; g < grid.n_cells(); ++g)
      CHECK(std::abs(after[g] - before[g]) < 1e-9);
  }
  SUBCASE("incremental equals batch") {
    AccumulatorSet acc(n, nodes, grid);
    for (int i = 0; i < n; ++i) acc.add(i, i % 2, rows);
    // Shuffle a few moves.
    acc.remove(3, rows);
    acc.add(3, 0, rows);
    acc.remove(0, rows);
    acc.add(0, 1, rows);
    for (int c = 0; c < acc.n_clusters(); ++c)
      for (int k = 0; k < nodes; ++k) {
        std::vector<NodeStat> members;
        for (int i = 0; i < n; ++i)
          if (acc.cluster_of(i) == c) members.push_back(stats[i][k]);
        double direct = log_marginal_active(members, grid);
        double via_acc = log_marginal_cells(acc.cells(c, k), grid);
        CHECK(std::abs(direct - via_acc) < 1e-8);
        CHECK(std::abs(acc.log_l1(c, k, rows) - direct) < 1e-8);
      }
  }
  SUBCASE("empty accumulator yields zero marginal") {
    AccumulatorSet acc(n, nodes, grid);
    acc.add(0, 0, rows);
    CHECK(log_marginal_cells(std::vector<double>(grid.n_cells(), 0.0), grid) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("double add and stray remove are errors") {
    AccumulatorSet acc(n, nodes, grid);
    acc.add(0, 0, rows);
    CHECK_THROWS_AS(acc.add(0, 0, rows), std::logic_error);
    CHECK_THROWS_AS(acc.remove(1, rows), std::logic_error);
    CHECK_THROWS_AS(acc.add(1, 5, rows), std::out_of_range);
  }
  SUBCASE("deleting a cluster keeps the rest consistent") {
    AccumulatorSet acc(n, nodes, grid);
    acc.add(0, 0, rows);
    acc.add(1, 1, rows);
    acc.add(2, 2, rows);
    acc.remove(1, rows);  // cluster 1 becomes empty; cluster 2 moves in
    CHECK(acc.n_clusters() == 2);
    CHECK(acc.cluster_of(2) == 1);
    double direct = log_marginal_active(
        std::vector<NodeStat>{stats[2][0]}, grid);
    CHECK(std::abs(acc.log_l1(1, 0, rows) - direct) < 1e-10);
  }
}

TEST_CASE("grid row cache shares identical stats") {
  auto grid = QuadGrid::make(0.5, 1.0, 16, 0.0, 1.0, 0.5);
  GridRowCache cache(grid);
  auto r1 = cache.row({3, 9});
  auto r2 = cache.row({3, 9});
  CHECK(r1.data() == r2.data());
  auto direct = grid_row({3, 9}, grid);
  for (int g = 0; g < grid.n_cells(); ++g) CHECK(r1[g] == direct[g]);
}
