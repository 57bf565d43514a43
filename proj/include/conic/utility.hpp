#pragma once

#include <string>
#include <vector>

#include "conic/dual.hpp"
#include "conic/market.hpp"
#include "conic/solve.hpp"

namespace conic {

// One-dimensional utility c |-> weight*u(c) + constant with u either c^p/p
// (p in (0,1)) or ln c.
struct Utility1D {
  enum class Kind { Power, Log };
  Kind kind = Kind::Log;
  double p = 0.5;
  double weight = 1.0;
  double constant = 0.0;
};

struct UtilityStage {
  enum class Variant { CoordinateSum, FirstCoordinate };
  Variant variant = Variant::CoordinateSum;
  std::vector<Utility1D> coord;  // size d for CoordinateSum, 1 for FirstCoordinate
};

// One stage per time 0..T.
struct UtilityFamily {
  std::vector<UtilityStage> stages;

  static UtilityFamily uniform(int horizon, UtilityStage stage) {
    UtilityFamily f;
    f.stages.assign(horizon + 1, std::move(stage));
    return f;
  }
};

double utility1_value(const Utility1D& u, double c);       // -inf outside dom
double utility1_slope(const Utility1D& u, double c);       // derivative, c > 0
double fenchel1(const Utility1D& u, double y);             // +inf possible
double truncated_fenchel1(const Utility1D& u, double y, double n);

double utility_value(const UtilityFamily& U, int t, const Vec& c);
Vec utility_supergradient(const UtilityFamily& U, int t, const Vec& c);
double fenchel(const UtilityFamily& U, int t, const Vec& y);
double truncated_fenchel(const UtilityFamily& U, int t, const Vec& y, double n);

struct GrowthReport {
  struct PerLambda {
    double lambda = 0.0;
    double C = 0.0;          // grid estimate of the growth constant
    double refined_C = 0.0;  // estimate on the doubled grid
    bool pass = false;
  };
  std::vector<PerLambda> rows;
  bool pass = true;
};

GrowthReport check_growth_condition(const UtilityFamily& U, int t,
                                    const std::vector<double>& lambdas,
                                    const std::vector<double>& grid);

double asymptotic_elasticity(const Utility1D& u);

struct PrimalResult {
  bool feasible = false;
  bool finite = false;
  double value = -kInf;  // +-inf when the corresponding flag fires
  ConsumptionPlan consumption;
  TransferPlan plan;
  SolveStatus status = SolveStatus::NumericalFailure;
  double gap = 0.0;
};

// maximize E[sum_t U_t(c_t)] over admissible consumption from x.
PrimalResult solve_primal(const MarketSpec& market, const UtilityFamily& U,
                          const Vec& x, const SolveOptions& opt = {});

// the one-dimensional slice through endowment (x^1, 0, ..., 0).
PrimalResult solve_u1(const MarketSpec& market, const UtilityFamily& U, double x1,
                      const SolveOptions& opt = {});

struct DualVariable {
  PriceSystem Z;
  double y1 = 0.0;
  double scale = 0.0;          // y1 / Z_0^1
  double alpha = 0.0;          // scale * a(0_N; Z, P)
};

struct DualResult {
  bool finite = false;
  double value = kInf;
  DualVariable best;
};

// min over candidate-induced dual variables of E[sum_t fenchel(U_t, Y_t)] +
// alpha; an upper bound on the dual value over the searched family.
DualResult solve_dual(const MarketSpec& market, const UtilityFamily& U, double y1,
                      const std::vector<PriceSystem>& candidates);

struct GapReport {
  struct Row {
    double y = 0.0;
    double w_y = 0.0;     // conjugate lower bound from the x grid
    double dual_y = 0.0;  // dual search value
    double gap = 0.0;
  };
  std::vector<Row> rows;
  bool weak_duality_ok = true;
};

GapReport duality_gap(const MarketSpec& market, const UtilityFamily& U,
                      const std::vector<double>& y_grid,
                      const std::vector<double>& x_grid);

}  // namespace conic
