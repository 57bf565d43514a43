#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "conic/market.hpp"
#include "helpers.hpp"

using namespace conic;
using namespace conic::testfix;

TEST_CASE("investment level is the industrial prefix sum") {
  MarketSpec m = chain_market(2, 1, 1);
  TransferPlan plan = zero_plan(m);
  plan.xi.at(0) = {-2.0, 1.0};
  plan.xi.at(1) = {0.5, -1.0};
  CHECK(investment_level(m, plan, 0)[0] == doctest::Approx(1.0));
  CHECK(investment_level(m, plan, 1)[0] == doctest::Approx(0.0));
  CHECK(investment_level(m, plan, 2)[0] == doctest::Approx(0.0));

  TransferPlan ones = zero_plan(m);
  for (int n = 0; n < 3; ++n) ones.xi.at(n) = {0.0, 1.0};
  CHECK(investment_level(m, ones, 2)[0] == doctest::Approx(3.0));
  CHECK(investment_level(m, zero_plan(m), 2)[0] == 0.0);
}

TEST_CASE("admissibility checks cones and industrial floors") {
  MarketSpec m = chain_market(1, 1, 1, 1.1);
  Vec x = {0.0, 0.0};
  CHECK(is_admissible(m, zero_plan(m), x, false));

  TransferPlan buy = zero_plan(m);
  buy.xi.at(0) = {-1.1, 1.0};  // -xi = (1.1,-1) is a generator
  CHECK(is_admissible(m, buy, x, false));

  TransferPlan shortind = zero_plan(m);
  shortind.xi.at(0) = {0.0, -1.0};  // industrial level dips below zero
  CHECK_FALSE(is_admissible(m, shortind, x, false));

  // the same short at the final date passes in the solid sense only
  TransferPlan late = zero_plan(m);
  late.xi.at(1) = {0.0, -1.0};
  CHECK(is_admissible(m, late, x, true));
  CHECK_FALSE(is_admissible(m, late, x, false));
}

TEST_CASE("terminal wealth accumulates transfers and rewards") {
  MarketSpec m = cobb_douglas_chain(/*p=*/1.0, /*gamma=*/0.5, /*eta=*/0.0);
  Vec x = {1.0, 0.0};
  TransferPlan plan = zero_plan(m);
  plan.xi.at(0) = {-1.0, 1.0};
  auto tw = terminal_wealth(m, x, plan);
  REQUIRE(tw.size() == 1);
  CHECK(tw[0][0] == doctest::Approx(1.0));  // 1 - 1 + sqrt(1)
  CHECK(tw[0][1] == doctest::Approx(1.0));

  MarketSpec z = chain_market(1, 1, 1);
  auto tz = terminal_wealth(z, x, zero_plan(z));
  CHECK(tz[0][0] == doctest::Approx(1.0));
  CHECK(tz[0][1] == doctest::Approx(0.0));

  // no industrial investment: returns vanish, terminal = x + sum xi
  TransferPlan fin = zero_plan(m);
  fin.xi.at(0) = {-0.25, 0.0};
  fin.xi.at(1) = {0.1, 0.0};
  auto tf = terminal_wealth(m, x, fin);
  CHECK(tf[0][0] == doctest::Approx(0.85));
}

TEST_CASE("return axioms hold for cobb-douglas and linear variants") {
  MarketSpec cd = cobb_douglas_chain(1.5, 0.4, 0.2, 1.05);
  AxiomReport rep = check_R_axioms(cd, 200);
  CHECK(rep.r1);
  CHECK(rep.r2);
  CHECK(rep.r3);
  CHECK(rep.scaling);
  CHECK(rep.all());

  EventTree tree = chain_tree(1, 1, 1);
  std::vector<Mat> pis(2, bidask_from_prices({1.0, 1.0}, 1.05));
  std::vector<PolyCone> cones;
  for (const Mat& pi : pis) cones.push_back(PolyCone::from_bid_ask(pi));
  ReturnSpec lin;
  lin.kind = ReturnSpec::Kind::Linear;
  Mat M(2, 1);
  M(0, 0) = 0.3;  // 0.3 units of cash per unit invested
  lin.lin.M.assign(2, M);
  MarketSpec lm = MarketSpec::build(tree, cones, lin, pis);
  AxiomReport lrep = check_R_axioms(lm, 200);
  CHECK(lrep.all());
}

TEST_CASE("an oracle return violating R(0)=0 is reported") {
  EventTree tree = chain_tree(1, 1, 1);
  std::vector<Mat> pis(2, bidask_from_prices({1.0, 1.0}, 1.05));
  std::vector<PolyCone> cones;
  for (const Mat& pi : pis) cones.push_back(PolyCone::from_bid_ask(pi));
  ReturnSpec bad;
  bad.kind = ReturnSpec::Kind::Oracle;
  bad.oracle.value = [](int, const Vec&) { return Vec{1.0, 0.0}; };
  bad.oracle.supergrad = [](int, const Vec&) { return Mat(2, 1, 0.0); };
  bad.oracle.declared_concave = true;
  MarketSpec m = MarketSpec::build(tree, cones, bad, pis);
  AxiomReport rep = check_R_axioms(m, 50);
  CHECK_FALSE(rep.r1);
  CHECK_FALSE(rep.failures.empty());
}

TEST_CASE("convex combination of plans") {
  // linear returns: the compensator vanishes and the combination is plain
  EventTree tree = chain_tree(1, 1, 1);
  std::vector<Mat> pis(2, bidask_from_prices({1.0, 1.0}, 1.05));
  std::vector<PolyCone> cones;
  for (const Mat& pi : pis) cones.push_back(PolyCone::from_bid_ask(pi));
  ReturnSpec lin;
  lin.kind = ReturnSpec::Kind::Linear;
  Mat M(2, 1);
  M(0, 0) = 0.3;
  lin.lin.M.assign(2, M);
  MarketSpec lm = MarketSpec::build(tree, cones, lin, pis);

  Vec x = {2.0, 0.0};
  TransferPlan a = zero_plan(lm), b = zero_plan(lm);
  a.xi.at(0) = {-1.05, 1.0};
  b.xi.at(0) = {-0.525, 0.5};
  b.xi.at(1) = {-0.1, 0.0};  // -xi = (0.1, 0): plain disposal
  TransferPlan mix = convex_combine_plans(lm, a, b, x, 0.25);
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 2; ++k)
      CHECK(mix.xi.at(n)[k] ==
            doctest::Approx(0.25 * a.xi.at(n)[k] + 0.75 * b.xi.at(n)[k]));

  TransferPlan same = convex_combine_plans(lm, a, b, x, 1.0);
  for (int k = 0; k < 2; ++k) CHECK(same.xi.at(0)[k] == doctest::Approx(a.xi.at(0)[k]));

  // cobb-douglas: terminal wealth is the exact midpoint
  MarketSpec cd = cobb_douglas_chain(1.0, 0.5, 0.0, 1.05);
  TransferPlan ca = zero_plan(cd), cb = zero_plan(cd);
  ca.xi.at(0) = {-1.05, 1.0};
  cb.xi.at(0) = {-0.2625, 0.25};
  TransferPlan cm = convex_combine_plans(cd, ca, cb, x, 0.5);
  CHECK(is_admissible(cd, cm, x, false));
  auto ta = terminal_wealth(cd, x, ca);
  auto tb = terminal_wealth(cd, x, cb);
  auto tm = terminal_wealth(cd, x, cm);
  for (int k = 0; k < 2; ++k)
    CHECK(tm[0][k] == doctest::Approx(0.5 * ta[0][k] + 0.5 * tb[0][k]).epsilon(1e-9));
}

TEST_CASE("attainability of simple targets") {
  MarketSpec m = chain_market(1, 1, 1, 1.05);
  Vec x = {1.0, 0.0};
  CHECK(is_attainable(m, x, {x}, false));

  // conjuring an extra cash unit would be an arbitrage
  CHECK_FALSE(is_attainable(m, x, {{2.0, 0.0}}, false));

  // any admissible plan's terminal wealth is attainable
  TransferPlan plan = zero_plan(m);
  plan.xi.at(0) = {-1.05, 1.0};
  plan.xi.at(1) = {0.1, -0.105};  // partial sell-back at cost 1.05
  REQUIRE(is_admissible(m, plan, x, false));
  CHECK(is_attainable(m, x, terminal_wealth(m, x, plan), false));
}

TEST_CASE("solid targets may liquidate terminal industrial holdings") {
  MarketSpec m = chain_market(1, 1, 1, 1.0);
  Vec x = {0.0, 1.0};  // one unit of the industrial asset, price 1
  // turn the holding into cash at T: fine in both senses
  CHECK(is_attainable(m, x, {{1.0, 0.0}}, false));
  CHECK(is_attainable(m, x, {{1.0, 0.0}}, true));
  // sell two units: terminal industrial level -1, solid sense only
  CHECK(is_attainable(m, x, {{2.0, -1.0}}, true));
  CHECK_FALSE(is_attainable(m, x, {{2.0, -1.0}}, false));
}

TEST_CASE("consumption feasibility per the accumulated-target form") {
  MarketSpec m = chain_market(1, 1, 1);
  Vec x = {1.0, 0.0};
  ConsumptionPlan ok{AdaptedProcess(m.tree(), 1)};
  ok.c.at(0) = {0.4};
  ok.c.at(1) = {0.6};
  CHECK(is_consumable(m, x, ok));

  ConsumptionPlan zero{AdaptedProcess(m.tree(), 1)};
  CHECK(is_consumable(m, Vec{0.0, 0.0}, zero));

  ConsumptionPlan greedy{AdaptedProcess(m.tree(), 1)};
  greedy.c.at(0) = {0.6};
  greedy.c.at(1) = {0.6};
  CHECK_FALSE(is_consumable(m, x, greedy));
}

TEST_CASE("extracted plans re-verify end to end") {
  MarketSpec m = cobb_douglas_chain(1.0, 0.5, 0.1, 1.02);
  Vec x = {1.0, 0.0};
  std::vector<Vec> target = {{1.1, 0.0}};  // investing 0.25 yields ~0.195 profit
  TransferPlan witness;
  REQUIRE(is_attainable(m, x, target, false, &witness));
  CHECK(is_admissible(m, witness, x, false));
  auto tw = terminal_wealth(m, x, witness);
  for (int k = 0; k < 2; ++k)
    CHECK(std::abs(tw[0][k] - target[0][k]) < 1e-8);
}

TEST_CASE("attainability is translation covariant in the financial endowment") {
  MarketSpec m = binomial_market(2.0, 0.5, 1.01);
  Vec x = {1.0, 0.0, 0.0};
  TransferPlan plan = zero_plan(m);
  plan.xi.at(0) = {-0.5 * 1.01, 0.5, 0.0};
  REQUIRE(is_admissible(m, plan, x, false));
  auto base = terminal_wealth(m, x, plan);
  Vec shifted = {1.25, 0.0, 0.0};
  auto moved = terminal_wealth(m, shifted, plan);
  for (std::size_t l = 0; l < base.size(); ++l) {
    CHECK(moved[l][0] == doctest::Approx(base[l][0] + 0.25));
    CHECK(moved[l][1] == doctest::Approx(base[l][1]));
    CHECK(moved[l][2] == doctest::Approx(base[l][2]));
  }
}

TEST_CASE("scaling relation of returns on random samples") {
  MarketSpec m = cobb_douglas_chain(1.5, 0.4, 0.2, 1.05);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ua(0.01, 3.0), ue(1.0, 8.0);
  int node = 1;  // the only t = 1 node of the chain
  for (int s = 0; s < 300; ++s) {
    double eta = ue(rng);
    Vec alpha = {ua(rng)};
    Vec lhs = m.eval_return(node, scale(alpha, eta));
    Vec gap = sub(scale(lhs, 1.0 / eta), m.eval_return(node, alpha));
    CHECK(cone_contains(m.kbar(node), scale(gap, -1.0), 1e-8));
  }
}
