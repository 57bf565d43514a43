#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conic/cone.hpp"
#include "conic/solve.hpp"
#include "conic/tree.hpp"

namespace conic {

// Return increment used when dominating a market: R(alpha) + eps*min(1,
// sum alpha)*w_node with w_node a relative-interior point of the financial
// part of the node cone.
struct Perturbation {
  double epsilon = 0.0;
  std::vector<Vec> w;  // per node, dimension d+N, industrial coords zero
};

struct CobbDouglasParams {
  Vec gamma;               // N exponents, all > 0, sum < 1
  std::vector<double> p;   // output price per node
  std::vector<Vec> eta;    // input cost vector per node (N)
  int payout_coord = 0;    // 0-based financial coordinate receiving the payout
};

struct LinearParams {
  std::vector<Mat> M;  // per node, (d+N) x N
};

struct OracleParams {
  std::function<Vec(int node, const Vec& alpha)> value;
  std::function<Mat(int node, const Vec& alpha)> supergrad;  // (d+N) x N
  bool declared_concave = false;
};

struct ReturnSpec {
  enum class Kind { Zero, CobbDouglas, Linear, Oracle };
  Kind kind = Kind::Zero;
  CobbDouglasParams cd;
  LinearParams lin;
  OracleParams oracle;
  std::optional<Perturbation> perturbation;
  // affine minorant (a_t, L_t) per node, for the oracle axiom check
  std::optional<std::pair<std::vector<Vec>, std::vector<Mat>>> minorant;

  static ReturnSpec zero() { return {}; }
};

class MarketSpec {
 public:
  // Validates the orthant-in-interior assumption at every node and the
  // structural return-spec invariants.
  static MarketSpec build(EventTree tree, std::vector<PolyCone> cones, ReturnSpec ret,
                          std::optional<std::vector<Mat>> bidask = std::nullopt);

  const EventTree& tree() const { return tree_; }
  const PolyCone& cone(int node) const { return cones_[node]; }
  const PolyCone& kbar(int node) const { return kbar_[node]; }
  const ReturnSpec& ret() const { return ret_; }
  const std::optional<std::vector<Mat>>& bidask() const { return bidask_; }
  int d() const { return tree_.asset_d(); }
  int N() const { return tree_.asset_N(); }
  int dim() const { return tree_.dim(); }

  // Return evaluated at a node with t >= 1 for investment level alpha >= 0.
  Vec eval_return(int node, const Vec& alpha) const;
  // Supergradient rows, (d+N) x N; Cobb-Douglas boundary slopes capped.
  Mat return_supergrad(int node, const Vec& alpha) const;
  bool return_is_zero() const {
    return ret_.kind == ReturnSpec::Kind::Zero && !ret_.perturbation;
  }

 private:
  EventTree tree_;
  std::vector<PolyCone> cones_;
  std::vector<PolyCone> kbar_;
  ReturnSpec ret_;
  std::optional<std::vector<Mat>> bidask_;
};

struct TransferPlan {
  AdaptedProcess xi;  // dimension d+N
};

struct ConsumptionPlan {
  AdaptedProcess c;  // dimension d, componentwise >= 0
};

Vec investment_level(const MarketSpec& market, const TransferPlan& plan, int node);

bool is_admissible(const MarketSpec& market, const TransferPlan& plan, const Vec& x,
                   bool solid, double tol = 1e-8);

// Per leaf (order of tree().leaves()): x + sum_path xi + sum of rewards.
std::vector<Vec> terminal_wealth(const MarketSpec& market, const Vec& x,
                                 const TransferPlan& plan);

struct AxiomReport {
  bool r1 = false, r2 = false, r3 = false, scaling = false;
  std::vector<std::string> failures;
  bool all() const { return r1 && r2 && r3 && scaling; }
};

AxiomReport check_R_axioms(const MarketSpec& market, int sample_count,
                           unsigned seed = 0);

// Compensated combination: an admissible plan whose terminal
// wealth is exactly eps*terminal(a) + (1-eps)*terminal(b).
TransferPlan convex_combine_plans(const MarketSpec& market, const TransferPlan& a,
                                  const TransferPlan& b, const Vec& x, double eps);

struct EncodeOptions {
  bool solid = false;
  double bound_factor = 1e3;  // 0 disables box bounds (linear programs only)
  const std::vector<Vec>* targets = nullptr;  // per leaf, order tree().leaves()
  bool free_targets = false;
  double target_lo = 0.0;
  double target_hi = kInf;
  bool consumption_vars = false;
  const Vec* superhedge_dir = nullptr;  // adds scalar s: endowment x + s*dir
};

struct AttainEncoding {
  ConvexProgram prog;
  std::vector<int> xi_off;  // per node
  std::vector<int> r_off;   // per node, -1 when no reward block
  std::vector<int> s_off;   // per node, -1 when no perturbation variable
  std::vector<int> c_off;   // per node, -1 unless consumption_vars
  std::vector<int> g_off;   // per leaf, -1 unless free_targets
  int sh_var = -1;
  Vec x;
  bool solid = false;
  double box = 0.0;
};

AttainEncoding encode_market(const MarketSpec& market, const Vec& x,
                             const EncodeOptions& opts);

// Feasibility program for a fixed leaf-indexed target.
AttainEncoding encode_attainability(const MarketSpec& market, const Vec& x,
                                    const std::vector<Vec>& leaf_targets, bool solid,
                                    double bound_factor = 1e3);

// Feasibility program for a fixed consumption plan, per the accumulated
// terminal-target formulation.
AttainEncoding encode_consumption(const MarketSpec& market, const Vec& x,
                                  const ConsumptionPlan& c);

bool is_attainable(const MarketSpec& market, const Vec& x,
                   const std::vector<Vec>& leaf_targets, bool solid,
                   TransferPlan* witness = nullptr, double bound_factor = 1e3);

bool is_consumable(const MarketSpec& market, const Vec& x, const ConsumptionPlan& c,
                   TransferPlan* witness = nullptr);

// Exact plan from an encoding solution: appends the hypograph disposal so
// that terminal_wealth reproduces the encoded targets.
TransferPlan extract_plan(const MarketSpec& market, const AttainEncoding& enc,
                          const Vec& solution);

}  // namespace conic
