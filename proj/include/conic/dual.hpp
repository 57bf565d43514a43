#pragma once

#include <vector>

#include "conic/market.hpp"

namespace conic {

// Node price process with a reference measure given by leaf weights; empty
// weights mean the tree probabilities.
struct PriceSystem {
  AdaptedProcess Z;  // dimension d+N
  std::vector<double> weights;
};

// Leaf weights resolved against the tree (position l in tree.leaves()).
double leaf_weight(const PriceSystem& ps, const EventTree& tree, int leaf_pos);

// The four consistency clauses: (Z^F, 0) in the relative interior of the
// financial-part dual at every node, Z_T in the terminal dual cone with
// strictly positive components, and a financial martingale under the measure.
bool is_consistent(const PriceSystem& ps, const MarketSpec& market, double tol = 1e-7);

struct SupportValue {
  bool finite = true;
  double value = 0.0;
};

// a(x^I; Z, measure): sup of E[Z_T . g] over the solid attainable set from
// (0_d, x^I). Unboundedness is certified by an LP ray or by box doubling.
SupportValue support_value(const Vec& xI, const PriceSystem& ps,
                           const MarketSpec& market);

// max over candidates of E[Z_T . g] - Z_0^F . x^F - a(x^I; Z); requires
// consistent candidates with finite support value.
double superhedge_dual_bound(const std::vector<Vec>& leaf_claim, const Vec& x,
                             const MarketSpec& market,
                             const std::vector<PriceSystem>& candidates);

struct SuperhedgeResult {
  double price = 0.0;
  TransferPlan plan;  // certificate at the optimal shift
  bool bounded_below = true;
};

// Minimal s with claim reachable in the solid sense from x_base + s*direction
// (default: first financial unit vector). Throws when the claim is not
// reachable along the direction.
SuperhedgeResult superhedge_price(const std::vector<Vec>& leaf_claim, const Vec& x_base,
                                  const MarketSpec& market,
                                  const Vec* direction = nullptr,
                                  const Vec* lower_bound_shift = nullptr);

// Deterministic candidate systems: the margin-maximizing system plus
// claim-aligned and leaf-coordinate-aligned vertices of the consistency
// polytope at a small fixed margin.
std::vector<PriceSystem> enumerate_consistent_candidates(
    const MarketSpec& market, const std::vector<Vec>* leaf_claim = nullptr);

}  // namespace conic
