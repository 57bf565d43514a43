#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conic/tree.hpp"
#include "helpers.hpp"

using namespace conic;
using namespace conic::testfix;

TEST_CASE("two-leaf tree computes path probabilities") {
  EventTree tree = binomial_tree(1, 1);
  CHECK(tree.num_nodes() == 3);
  CHECK(tree.leaves().size() == 2);
  for (int l : tree.leaves()) CHECK(tree.prob(l) == doctest::Approx(0.5));
}

TEST_CASE("deterministic chain has all probabilities one") {
  EventTree tree = chain_tree(2, 1, 1);
  CHECK(tree.num_nodes() == 3);
  for (int i = 0; i < tree.num_nodes(); ++i) CHECK(tree.prob(i) == 1.0);
  CHECK(tree.leaves().size() == 1);
  CHECK(tree.time(tree.leaves()[0]) == 2);
}

TEST_CASE("two-level tree multiplies conditional probabilities") {
  std::vector<NodeDesc> nodes = {
      {0, 0, std::nullopt, 1.0}, {1, 1, 0, 0.3}, {2, 1, 0, 0.7},
      {3, 2, 1, 0.5},            {4, 2, 1, 0.5}, {5, 2, 2, 0.5},
      {6, 2, 2, 0.5},
  };
  EventTree tree = EventTree::build(2, 1, 1, nodes);
  std::vector<double> expect = {0.15, 0.15, 0.35, 0.35};
  REQUIRE(tree.leaves().size() == 4);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(tree.prob(tree.leaves()[i]) == doctest::Approx(expect[i]));
}

TEST_CASE("malformed trees are rejected") {
  CHECK_THROWS_AS(EventTree::build(1, 1, 1,
                                   {{0, 0, std::nullopt, 1.0},
                                    {0, 1, 0, 1.0}}),
                  ValidationError);  // duplicate id
  CHECK_THROWS_AS(EventTree::build(1, 1, 1,
                                   {{0, 0, std::nullopt, 1.0},
                                    {1, 1, 9, 1.0}}),
                  ValidationError);  // dangling parent
  CHECK_THROWS_AS(EventTree::build(1, 1, 1,
                                   {{0, 0, std::nullopt, 1.0},
                                    {1, 1, 0, 0.4},
                                    {2, 1, 0, 0.5}}),
                  ValidationError);  // children probabilities sum to 0.9
  CHECK_THROWS_AS(EventTree::build(2, 1, 1,
                                   {{0, 0, std::nullopt, 1.0},
                                    {1, 1, 0, 1.0}}),
                  ValidationError);  // leaf before the horizon
}

TEST_CASE("conditional expectation over children") {
  EventTree tree = binomial_tree(1, 1);
  AdaptedProcess p(tree, 2);
  int up = tree.leaves()[0], down = tree.leaves()[1];
  p.at(up) = {1.0, 2.0};
  p.at(down) = {1.0, 0.5};
  Vec e = conditional_expectation(tree, p, 0);
  CHECK(e[0] == doctest::Approx(1.0));
  CHECK(e[1] == doctest::Approx(1.25));

  AdaptedProcess c(tree, 2);
  for (int i = 0; i < 3; ++i) c.at(i) = {3.0, -1.0};
  Vec ec = conditional_expectation(tree, c, 0);
  CHECK(ec[0] == doctest::Approx(3.0));
  CHECK(ec[1] == doctest::Approx(-1.0));

  CHECK_THROWS(conditional_expectation(tree, p, up));
}

TEST_CASE("conditional expectation with uneven weights") {
  std::vector<NodeDesc> nodes = {{0, 0, std::nullopt, 1.0},
                                 {1, 1, 0, 1.0 / 3.0},
                                 {2, 1, 0, 2.0 / 3.0}};
  EventTree tree = EventTree::build(1, 1, 1, nodes);
  AdaptedProcess p(tree, 1);
  p.at(tree.index_of(1)) = {3.0};
  p.at(tree.index_of(2)) = {0.0};
  CHECK(conditional_expectation(tree, p, 0)[0] == doctest::Approx(1.0));
}

TEST_CASE("martingale test") {
  EventTree tree = binomial_tree(1, 1);
  AdaptedProcess m(tree, 2);
  m.at(0) = {1.0, 1.25};
  m.at(tree.leaves()[0]) = {1.0, 2.0};
  m.at(tree.leaves()[1]) = {1.0, 0.5};
  CHECK(is_martingale(tree, m, 1e-12));

  AdaptedProcess c(tree, 2);
  for (int i = 0; i < 3; ++i) c.at(i) = {4.0, 4.0};
  CHECK(is_martingale(tree, c, 1e-12));

  m.at(0) = {1.0, 1.3};  // off the children average
  CHECK_FALSE(is_martingale(tree, m, 1e-6));
}

TEST_CASE("leaf probabilities sum to one on a bushy tree") {
  std::vector<NodeDesc> nodes = {{0, 0, std::nullopt, 1.0}};
  int id = 1;
  for (int c = 0; c < 3; ++c) nodes.push_back({id++, 1, 0, 1.0 / 3.0});
  for (int p = 1; p <= 3; ++p) {
    nodes.push_back({id++, 2, p, 0.25});
    nodes.push_back({id++, 2, p, 0.75});
  }
  EventTree tree = EventTree::build(2, 2, 1, nodes);
  double total = 0.0;
  for (int l : tree.leaves()) total += tree.prob(l);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("conditional expectation is linear and satisfies the tower rule") {
  std::vector<NodeDesc> nodes = {
      {0, 0, std::nullopt, 1.0}, {1, 1, 0, 0.4}, {2, 1, 0, 0.6},
      {3, 2, 1, 0.2},            {4, 2, 1, 0.8}, {5, 2, 2, 1.0},
  };
  EventTree tree = EventTree::build(2, 1, 1, nodes);
  AdaptedProcess x(tree, 1), y(tree, 1);
  double vx[] = {0, 0, 0, 1.5, -2.0, 7.0};
  double vy[] = {0, 0, 0, 0.25, 4.0, -1.0};
  for (int l : tree.leaves()) {
    x.at(l) = {vx[l]};
    y.at(l) = {vy[l]};
  }
  AdaptedProcess z(tree, 1);
  for (int l : tree.leaves()) z.at(l) = {2.0 * vx[l] - 3.0 * vy[l]};

  for (int n : tree.nodes_at(1)) {
    double lin = 2.0 * conditional_expectation(tree, x, n)[0] -
                 3.0 * conditional_expectation(tree, y, n)[0];
    CHECK(conditional_expectation(tree, z, n)[0] ==
          doctest::Approx(lin).epsilon(1e-12));
  }

  AdaptedProcess stage(tree, 1);
  for (int n : tree.nodes_at(1)) stage.at(n) = conditional_expectation(tree, x, n);
  double nested = conditional_expectation(tree, stage, 0)[0];
  double direct = 0.0;
  for (int l : tree.leaves()) direct += tree.prob(l) * vx[l];
  CHECK(nested == doctest::Approx(direct).epsilon(1e-12));
}
