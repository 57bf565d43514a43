#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "conic/arbitrage.hpp"
#include "conic/dual.hpp"
#include "helpers.hpp"

using namespace conic;
using namespace conic::testfix;

namespace {

// support_value is legitimately +inf for some consistent systems; the dual
// bound only accepts the finite ones.
std::vector<PriceSystem> finite_candidates(const MarketSpec& m,
                                           const std::vector<Vec>* claim) {
  std::vector<PriceSystem> out;
  Vec xI(m.N(), 0.0);
  for (PriceSystem& ps : enumerate_consistent_candidates(m, claim))
    if (support_value(xI, ps, m).finite) out.push_back(std::move(ps));
  return out;
}

}  // namespace

TEST_CASE("consistency of solver-produced and hand-broken systems") {
  MarketSpec m = binomial_market(2.0, 0.5, 1.05);
  ConsistentPriceResult r = find_strictly_consistent_price(m);
  REQUIRE(r.found);
  CHECK(is_consistent(r.system, m));

  PriceSystem broken = r.system;
  broken.Z.at(0)[1] += 1e-3;  // martingale violated at the root
  CHECK_FALSE(is_consistent(broken, m));

  PriceSystem zeroed = r.system;
  zeroed.Z.at(m.tree().leaves()[0])[2] = 0.0;  // terminal component must be > 0
  CHECK_FALSE(is_consistent(zeroed, m));
}

TEST_CASE("support value vanishes without returns and grows with endowment") {
  MarketSpec m = binomial_market(2.0, 0.5, 1.05);
  ConsistentPriceResult r = find_strictly_consistent_price(m);
  REQUIRE(r.found);
  SupportValue a0 = support_value({0.0}, r.system, m);
  REQUIRE(a0.finite);
  CHECK(std::abs(a0.value) <= 1e-6);

  SupportValue a1 = support_value({1.0}, r.system, m);
  REQUIRE(a1.finite);
  CHECK(a1.value >= a0.value - 1e-8);  // monotone in the industrial endowment
}

TEST_CASE("a profitable project has positive support value") {
  MarketSpec m = cobb_douglas_chain(1.0, 0.5, 0.0, 1.02);
  ConsistentPriceResult r = find_strictly_consistent_price(m);
  REQUIRE(r.found);
  SupportValue a = support_value({0.0}, r.system, m);
  REQUIRE(a.finite);
  // sup over alpha of Z-weighted sqrt(alpha) profit is strictly positive
  CHECK(a.value > 1e-3);
}

TEST_CASE("dual bound is nonpositive on attainable claims") {
  MarketSpec m = binomial_market(2.0, 0.5, 1.01);
  Vec x = {1.0, 0.0, 0.0};
  TransferPlan plan = zero_plan(m);
  plan.xi.at(0) = {-0.505, 0.5, 0.0};
  REQUIRE(is_admissible(m, plan, x, false));
  std::vector<Vec> g = terminal_wealth(m, x, plan);
  auto candidates = finite_candidates(m, &g);
  REQUIRE_FALSE(candidates.empty());
  CHECK(superhedge_dual_bound(g, x, m, candidates) <= 1e-7);

  // padding the claim with cash pushes the bound positive
  std::vector<Vec> padded = g;
  for (Vec& leaf : padded) leaf[0] += 0.1;
  CHECK(superhedge_dual_bound(padded, x, m, candidates) > 1e-3);

  CHECK_THROWS(superhedge_dual_bound(g, x, m, {}));
}

TEST_CASE("binomial superhedge price matches the replication oracle") {
  MarketSpec m = binomial_market(2.0, 0.5);
  std::vector<Vec> claim = {{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  Vec x0 = {0.0, 0.0, 0.0};
  SuperhedgeResult r = superhedge_price(claim, x0, m);
  CHECK(r.price == doctest::Approx(1.0 / 3.0).epsilon(1e-8));

  std::vector<Vec> zero_claim(2, Vec(3, 0.0));
  CHECK(superhedge_price(zero_claim, x0, m).price <= 1e-9);
}

TEST_CASE("costs sandwich the frictionless price") {
  MarketSpec fric = binomial_market(2.0, 0.5);
  MarketSpec cost = binomial_market(2.0, 0.5, 1.01);
  std::vector<Vec> claim = {{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  Vec x0 = {0.0, 0.0, 0.0};
  double p_fric = superhedge_price(claim, x0, fric).price;
  double p_cost = superhedge_price(claim, x0, cost).price;
  CHECK(p_cost >= p_fric - 1e-9);
  CHECK(p_cost <= p_fric + 0.02);  // at most the cost premium

  // dual sandwich: best candidate bound meets the primal price
  auto candidates = finite_candidates(cost, &claim);
  double dual = superhedge_dual_bound(claim, x0, cost, candidates);
  CHECK(dual <= p_cost + 1e-7);
  CHECK(p_cost - dual <= 1e-5);
}

TEST_CASE("superhedge price is translation covariant") {
  MarketSpec m = binomial_market(2.0, 0.5, 1.01);
  std::vector<Vec> claim = {{1.0, 0.2, 0.0}, {0.3, 0.0, 0.0}};
  Vec x0 = {0.0, 0.0, 0.0};
  double base = superhedge_price(claim, x0, m).price;
  std::vector<Vec> shifted = claim;
  for (Vec& leaf : shifted) leaf[0] += 0.25;
  double moved = superhedge_price(shifted, x0, m).price;
  CHECK(moved == doctest::Approx(base + 0.25).epsilon(1e-7));
}

TEST_CASE("superhedge price is monotone in the claim") {
  MarketSpec m = binomial_market(2.0, 0.5, 1.01);
  std::vector<Vec> lo = {{0.5, 0.0, 0.0}, {0.1, 0.0, 0.0}};
  std::vector<Vec> hi = {{0.6, 0.1, 0.0}, {0.1, 0.0, 0.0}};  // hi - lo in K_T
  Vec x0 = {0.0, 0.0, 0.0};
  CHECK(superhedge_price(hi, x0, m).price >=
        superhedge_price(lo, x0, m).price - 1e-8);
}

TEST_CASE("weak duality against an attainability witness") {
  MarketSpec m = binomial_market(2.0, 0.5, 1.05);
  Vec x = {1.0, 0.0, 0.0};
  std::vector<Vec> g = {{0.9, 0.0, 0.0}, {0.9, 0.0, 0.0}};
  REQUIRE(is_attainable(m, x, g, true));
  for (const PriceSystem& z : enumerate_consistent_candidates(m, &g)) {
    SupportValue a = support_value({0.0}, z, m);
    if (!a.finite) continue;
    double ezg = 0.0;
    const EventTree& tree = m.tree();
    for (std::size_t l = 0; l < tree.leaves().size(); ++l)
      ezg += leaf_weight(z, tree, static_cast<int>(l)) *
             dot(z.Z.at(tree.leaves()[l]), g[l]);
    double lhs = ezg - z.Z.at(0)[0] * x[0] - z.Z.at(0)[1] * x[1] - a.value;
    CHECK(lhs <= 1e-7);
  }
}

TEST_CASE("measure reweighting leaves the pairing invariant") {
  MarketSpec m = binomial_market(2.0, 0.5, 1.05);
  ConsistentPriceResult r = find_strictly_consistent_price(m);
  REQUIRE(r.found);
  const EventTree& tree = m.tree();

  // tilt the measure by H and compensate Z on the leaves by 1/H
  std::vector<double> H = {1.6, 0.4};
  PriceSystem tilted = r.system;
  tilted.weights.assign(2, 0.0);
  double norm = 0.0;
  for (std::size_t l = 0; l < 2; ++l)
    norm += tree.prob(tree.leaves()[l]) * H[l];
  for (std::size_t l = 0; l < 2; ++l) {
    tilted.weights[l] = tree.prob(tree.leaves()[l]) * H[l] / norm;
    tilted.Z.at(tree.leaves()[l]) =
        scale(r.system.Z.at(tree.leaves()[l]), norm / H[l]);
  }
  REQUIRE(is_consistent(tilted, m));

  std::vector<Vec> g = {{0.4, 0.1, 0.0}, {0.2, 0.0, 0.1}};
  auto pair = [&](const PriceSystem& z) {
    double s = 0.0;
    for (std::size_t l = 0; l < 2; ++l)
      s += leaf_weight(z, tree, static_cast<int>(l)) *
           dot(z.Z.at(tree.leaves()[l]), g[l]);
    return s;
  };
  CHECK(pair(tilted) == doctest::Approx(pair(r.system)).epsilon(1e-8));

  SupportValue a0 = support_value({0.0}, r.system, m);
  SupportValue a1 = support_value({0.0}, tilted, m);
  REQUIRE(a0.finite);
  REQUIRE(a1.finite);
  CHECK(a1.value == doctest::Approx(a0.value).epsilon(1e-6));
}
