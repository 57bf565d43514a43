#pragma once

#include <string>
#include <vector>

#include "conic/dual.hpp"
#include "conic/market.hpp"

namespace conic {

struct NAReport {
  bool no_arbitrage = true;
  double objective = 0.0;  // max expected nonnegative terminal mass
  bool has_witness = false;
  TransferPlan witness;
  std::vector<Vec> witness_terminal;  // per leaf, re-verified
  SolveStatus solver_status = SolveStatus::Optimal;
  int iterations = 0;
};

// Decides NA by maximizing E[sum_i g_i] over nonnegative claims in the solid
// attainable set from 0; NoArbitrage iff the optimum is <= 1e-7.
NAReport check_na(const MarketSpec& market);

// Dominating market: costs shrunk by epsilon on strictly frictional pairs,
// return raised by epsilon*min(1,|alpha|_1)*w with w in the relative interior
// of the financial-part cone. Requires bid-ask form cones.
MarketSpec dominate(const MarketSpec& market, double epsilon);

struct NARReport {
  struct PerEpsilon {
    double epsilon = 0.0;
    bool no_arbitrage = false;
    double objective = 0.0;
  };
  std::vector<PerEpsilon> results;
  bool robust_na = false;
  std::string note;
};

// Robust NA over a sampled epsilon list; the verdict certifies the
// constructed dominating family only.
NARReport check_nar(const MarketSpec& market,
                    const std::vector<double>& epsilons = {0.5, 0.1, 0.01});

struct ConsistentPriceResult {
  bool found = false;
  double margin = 0.0;
  PriceSystem system;
};

// Margin-maximization LP over node price vectors: financial martingale
// equalities, dual-cone margins, Z_root^1 = 1. found iff margin > min_margin.
ConsistentPriceResult find_strictly_consistent_price(const MarketSpec& market,
                                                     double min_margin = 1e-7);

// Null-strategy test on a solid-admissible plan from 0 whose terminal wealth
// is a time-t0-measurable financial-cone-valued target (one vector per node
// at t0): the plan must never truly invest or leave the frictionless
// directions.
bool null_strategy_property(const MarketSpec& market, const TransferPlan& plan,
                            const std::vector<Vec>& epsilon_targets, int t0,
                            double tol = 1e-8);

}  // namespace conic
