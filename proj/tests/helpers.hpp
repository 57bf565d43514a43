#pragma once

// Shared fixture builders for the test binaries. Everything here is small
// hand-checkable market plumbing; the numeric content lives in the tests.

#include <vector>

#include "conic/market.hpp"
#include "conic/tree.hpp"

namespace conic::testfix {

// Root plus one child per period, all probabilities 1.
inline EventTree chain_tree(int T, int d, int N) {
  std::vector<NodeDesc> nodes;
  nodes.push_back({0, 0, std::nullopt, 1.0});
  for (int t = 1; t <= T; ++t) nodes.push_back({t, t, t - 1, 1.0});
  return EventTree::build(T, d, N, std::move(nodes));
}

// One-period binomial: root 0, children 1 (up) and 2 (down), q = 1/2 each.
inline EventTree binomial_tree(int d, int N, double q_up = 0.5) {
  std::vector<NodeDesc> nodes;
  nodes.push_back({0, 0, std::nullopt, 1.0});
  nodes.push_back({1, 1, 0, q_up});
  nodes.push_back({2, 1, 0, 1.0 - q_up});
  return EventTree::build(1, d, N, std::move(nodes));
}

// Bid-ask matrix of a frictionless multi-asset market with price vector p
// (cost multiplier applies symmetrically to every pair when > 1).
inline Mat bidask_from_prices(const Vec& p, double cost = 1.0) {
  std::size_t m = p.size();
  Mat pi(m, m, 1.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) pi(i, j) = cost * p[j] / p[i];
  return pi;
}

// Frictionless (or uniformly costed) market on a given tree with one price
// vector per node and zero industrial returns.
inline MarketSpec priced_market(EventTree tree, const std::vector<Vec>& node_prices,
                                double cost = 1.0) {
  std::vector<Mat> pis;
  std::vector<PolyCone> cones;
  for (const Vec& p : node_prices) {
    Mat pi = bidask_from_prices(p, cost);
    cones.push_back(PolyCone::from_bid_ask(pi));
    pis.push_back(pi);
  }
  return MarketSpec::build(std::move(tree), std::move(cones), ReturnSpec::zero(),
                           std::move(pis));
}

// Deterministic T-period chain, all assets at price 1, zero returns.
inline MarketSpec chain_market(int T, int d, int N, double cost = 1.0) {
  EventTree tree = chain_tree(T, d, N);
  std::vector<Vec> prices(tree.num_nodes(), Vec(d + N, 1.0));
  return priced_market(std::move(tree), prices, cost);
}

// One-period binomial stock market: cash + stock financial (d = 2), one
// inert industrial asset at constant price 1 (N = 1), zero returns. The
// stock moves from 1 to up / down with probability 1/2 each.
inline MarketSpec binomial_market(double up, double down, double cost = 1.0) {
  EventTree tree = binomial_tree(2, 1);
  std::vector<Vec> prices = {{1.0, 1.0, 1.0}, {1.0, up, 1.0}, {1.0, down, 1.0}};
  return priced_market(std::move(tree), prices, cost);
}

// Deterministic one-period Cobb-Douglas project: cash + one input, input
// price 1, payout p * alpha^gamma - eta * alpha in cash at t = 1.
inline MarketSpec cobb_douglas_chain(double p, double gamma, double eta,
                                     double cost = 1.0, int T = 1) {
  EventTree tree = chain_tree(T, 1, 1);
  std::vector<Mat> pis(tree.num_nodes(), bidask_from_prices({1.0, 1.0}, cost));
  std::vector<PolyCone> cones;
  for (const Mat& pi : pis) cones.push_back(PolyCone::from_bid_ask(pi));
  ReturnSpec ret;
  ret.kind = ReturnSpec::Kind::CobbDouglas;
  ret.cd.gamma = {gamma};
  ret.cd.p.assign(tree.num_nodes(), p);
  ret.cd.eta.assign(tree.num_nodes(), Vec{eta});
  ret.cd.payout_coord = 0;
  return MarketSpec::build(std::move(tree), std::move(cones), std::move(ret),
                           std::move(pis));
}

inline TransferPlan zero_plan(const MarketSpec& m) {
  return {AdaptedProcess(m.tree(), m.dim(), 0.0)};
}

}  // namespace conic::testfix
