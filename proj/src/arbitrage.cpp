#include "conic/arbitrage.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "conic/solve.hpp"

namespace conic {

NAReport check_na(const MarketSpec& market) {
  const EventTree& tree = market.tree();
  Vec zero(market.dim(), 0.0);

  EncodeOptions opts;
  opts.solid = true;
  opts.free_targets = true;
  opts.target_lo = 0.0;
  opts.bound_factor = 1e3;
  AttainEncoding enc = encode_market(market, zero, opts);
  for (std::size_t l = 0; l < tree.leaves().size(); ++l) {
    double pl = tree.prob(tree.leaves()[l]);
    for (int k = 0; k < market.dim(); ++k) enc.prog.c[enc.g_off[l] + k] = pl;
  }

  SolveResult res = maximize_concave(enc.prog);
  NAReport rep;
  rep.solver_status = res.status;
  rep.iterations = res.iterations;
  if (res.x.empty()) {
    if (res.status == SolveStatus::Infeasible)
      throw SolverFailure("check_na: feasibility lost (zero plan should be feasible)");
    throw SolverFailure("check_na: solver returned no point");
  }
  rep.objective = res.value;
  rep.no_arbitrage = res.value <= 1e-7;
  if (!rep.no_arbitrage) {
    rep.witness = extract_plan(market, enc, res.x);
    rep.has_witness = true;
    rep.witness_terminal = terminal_wealth(market, zero, rep.witness);
  }
  return rep;
}

MarketSpec dominate(const MarketSpec& market, double epsilon) {
  if (!market.bidask())
    throw ValidationError("GeneratorFormCone: dominate requires bid-ask cones");
  if (market.ret().perturbation)
    throw ValidationError("dominate: market already carries a return perturbation");
  const EventTree& tree = market.tree();

  std::vector<Mat> shrunk;
  std::vector<PolyCone> cones;
  shrunk.reserve(tree.num_nodes());
  for (int n = 0; n < tree.num_nodes(); ++n) {
    shrunk.push_back(shrink_costs((*market.bidask())[n], epsilon));
    cones.push_back(PolyCone::from_bid_ask(shrunk.back()));
  }

  ReturnSpec ret = market.ret();
  Perturbation pert;
  pert.epsilon = epsilon;
  pert.w.assign(tree.num_nodes(), Vec(market.dim(), 0.0));
  for (int n = 0; n < tree.num_nodes(); ++n)
    if (tree.time(n) >= 1) pert.w[n] = relative_interior_point(market.kbar(n));
  ret.perturbation = std::move(pert);

  return MarketSpec::build(tree, std::move(cones), std::move(ret), std::move(shrunk));
}

NARReport check_nar(const MarketSpec& market, const std::vector<double>& epsilons) {
  if (epsilons.empty())
    throw ValidationError("EmptyEpsilonList: at least one epsilon required");
  NARReport rep;
  double eps_min = kInf;
  bool na_at_min = false;
  for (double eps : epsilons) {
    NAReport na = check_na(dominate(market, eps));
    rep.results.push_back({eps, na.no_arbitrage, na.objective});
    if (eps < eps_min) {
      eps_min = eps;
      na_at_min = na.no_arbitrage;
    }
  }
  rep.robust_na = na_at_min;
  rep.note =
      "verdict certifies the constructed dominating family (cost shrink + "
      "financial return bump) at the sampled epsilons only";
  return rep;
}

bool null_strategy_property(const MarketSpec& market, const TransferPlan& plan,
                            const std::vector<Vec>& epsilon_targets, int t0,
                            double tol) {
  const EventTree& tree = market.tree();
  if (t0 < 0 || t0 > tree.horizon())
    throw ValidationError("PreconditionViolated: t0 outside the horizon");
  std::vector<int> t0_nodes = tree.nodes_at(t0);
  if (epsilon_targets.size() != t0_nodes.size())
    throw DimensionMismatch("null_strategy_property: one target per node at t0");
  Vec zero(market.dim(), 0.0);
  if (!is_admissible(market, plan, zero, true, 1e-7))
    throw ValidationError("PreconditionViolated: plan not solid-admissible from 0");

  // terminal wealth must equal the t0-measurable target along every scenario
  std::vector<Vec> terminal = terminal_wealth(market, zero, plan);
  for (std::size_t l = 0; l < tree.leaves().size(); ++l) {
    int anc = tree.leaves()[l];
    while (tree.time(anc) > t0) anc = tree.parent(anc);
    std::size_t pos =
        std::find(t0_nodes.begin(), t0_nodes.end(), anc) - t0_nodes.begin();
    if (norm_inf(sub(terminal[l], epsilon_targets[pos])) > 1e-6)
      throw ValidationError("PreconditionViolated: terminal wealth != target");
  }

  for (int n = 0; n < tree.num_nodes(); ++n) {
    if (norm_inf(investment_level(market, plan, n)) > tol) return false;
    if (!in_lineality(market.kbar(n), plan.xi.at(n), tol)) return false;
  }
  for (std::size_t i = 0; i < t0_nodes.size(); ++i)
    if (!in_lineality(market.kbar(t0_nodes[i]), epsilon_targets[i], tol)) return false;
  return true;
}

}  // namespace conic
