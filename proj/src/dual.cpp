#include "conic/dual.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "conic/arbitrage.hpp"
#include "conic/solve.hpp"

namespace conic {

double leaf_weight(const PriceSystem& ps, const EventTree& tree, int leaf_pos) {
  if (ps.weights.empty()) return tree.prob(tree.leaves()[leaf_pos]);
  return ps.weights[leaf_pos];
}

namespace {

// total measure mass sitting under each node
std::vector<double> node_weights(const PriceSystem& ps, const EventTree& tree) {
  std::vector<double> w(tree.num_nodes(), 0.0);
  for (std::size_t l = 0; l < tree.leaves().size(); ++l)
    w[tree.leaves()[l]] = leaf_weight(ps, tree, static_cast<int>(l));
  for (int n = tree.num_nodes() - 1; n >= 0; --n)
    if (!tree.is_leaf(n))
      for (int c : tree.children(n)) w[n] += w[c];
  return w;
}

}  // namespace

bool is_consistent(const PriceSystem& ps, const MarketSpec& market, double tol) {
  const EventTree& tree = market.tree();
  if (ps.Z.dim() != market.dim() || ps.Z.num_nodes() != tree.num_nodes()) return false;
  if (!ps.weights.empty() &&
      ps.weights.size() != tree.leaves().size())
    return false;
  const int d = market.d();

  for (int n = 0; n < tree.num_nodes(); ++n) {
    Vec zf0(market.dim(), 0.0);
    for (int k = 0; k < d; ++k) zf0[k] = ps.Z.at(n)[k];
    const PolyCone& kbar = market.kbar(n);
    if (!kbar.gens.empty() && !in_dual_relative_interior(kbar, zf0, tol)) return false;
  }
  for (int leaf : tree.leaves()) {
    const Vec& z = ps.Z.at(leaf);
    if (!dual_contains(market.cone(leaf), z)) return false;
    for (double v : z)
      if (v <= tol) return false;
  }
  std::vector<double> w = node_weights(ps, tree);
  for (int n = 0; n < tree.num_nodes(); ++n) {
    if (tree.is_leaf(n)) continue;
    if (w[n] <= 0.0) return false;
    for (int k = 0; k < d; ++k) {
      double s = 0.0;
      for (int c : tree.children(n)) s += w[c] * ps.Z.at(c)[k];
      if (std::abs(s - w[n] * ps.Z.at(n)[k]) > tol * (1.0 + std::abs(w[n] * ps.Z.at(n)[k])))
        return false;
    }
  }
  return true;
}

namespace {

struct PriceLP {
  ConvexProgram prog;
  std::vector<int> z_off;
  int delta_var = -1;
};

// Margin LP over per-node price vectors: dual-cone rows for the full cone and
// its financial part (lineality generators pinned to zero), financial
// martingale equalities, Z_root^1 = 1.
PriceLP build_price_lp(const MarketSpec& market, bool variable_margin,
                       double fixed_margin) {
  const EventTree& tree = market.tree();
  const int dim = market.dim();
  const int d = market.d();
  const int nn = tree.num_nodes();

  PriceLP lp;
  lp.z_off.assign(nn, -1);
  int nv = 0;
  for (int n = 0; n < nn; ++n) {
    lp.z_off[n] = nv;
    nv += dim;
  }
  if (variable_margin) lp.delta_var = nv++;

  ConvexProgram& p = lp.prog;
  p.init(nv);
  const double B = 1e3;
  for (int n = 0; n < nn; ++n)
    for (int k = 0; k < dim; ++k) {
      p.lo[lp.z_off[n] + k] = -B;
      p.hi[lp.z_off[n] + k] = B;
    }
  if (lp.delta_var >= 0) {
    p.lo[lp.delta_var] = 0.0;
    p.hi[lp.delta_var] = 1.0;
    p.c[lp.delta_var] = 1.0;
  }
  p.lo[lp.z_off[0] + 0] = 1.0;
  p.hi[lp.z_off[0] + 0] = 1.0;

  auto add_dual_rows = [&](int n, const PolyCone& cone) {
    for (const Vec& g : cone.gens) {
      bool lin = cone_contains(cone, scale(g, -1.0));
      Vec row(nv, 0.0);
      for (int k = 0; k < dim; ++k) row[lp.z_off[n] + k] = g[k];
      if (lin) {
        p.add_eq(std::move(row), 0.0);
      } else if (variable_margin) {
        row[lp.delta_var] = -norm2(g);
        p.add_ge(std::move(row), 0.0);
      } else {
        p.add_ge(std::move(row), fixed_margin * norm2(g));
      }
    }
  };
  for (int n = 0; n < nn; ++n) {
    add_dual_rows(n, market.cone(n));
    if (!market.kbar(n).gens.empty()) add_dual_rows(n, market.kbar(n));
  }

  for (int n = 0; n < nn; ++n) {
    if (tree.is_leaf(n)) continue;
    for (int k = 0; k < d; ++k) {
      Vec row(nv, 0.0);
      row[lp.z_off[n] + k] = -1.0;
      for (int c : tree.children(n)) row[lp.z_off[c] + k] = tree.cond_prob(c);
      p.add_eq(std::move(row), 0.0);
    }
  }
  return lp;
}

PriceSystem price_from_solution(const MarketSpec& market, const PriceLP& lp,
                                const Vec& x) {
  PriceSystem ps;
  ps.Z = AdaptedProcess(market.tree(), market.dim());
  for (int n = 0; n < market.tree().num_nodes(); ++n)
    for (int k = 0; k < market.dim(); ++k) ps.Z.at(n)[k] = x[lp.z_off[n] + k];
  return ps;
}

double expected_claim_value(const PriceSystem& ps, const MarketSpec& market,
                            const std::vector<Vec>& claim) {
  double s = 0.0;
  const EventTree& tree = market.tree();
  for (std::size_t l = 0; l < tree.leaves().size(); ++l)
    s += leaf_weight(ps, tree, static_cast<int>(l)) *
         dot(ps.Z.at(tree.leaves()[l]), claim[l]);
  return s;
}

}  // namespace

SupportValue support_value(const Vec& xI, const PriceSystem& ps,
                           const MarketSpec& market) {
  const EventTree& tree = market.tree();
  if (static_cast<int>(xI.size()) != market.N())
    throw DimensionMismatch("support_value: x^I size != N");
  Vec x(market.dim(), 0.0);
  for (int i = 0; i < market.N(); ++i) x[market.d() + i] = xI[i];

  auto build = [&](double bound_factor) {
    EncodeOptions opts;
    opts.solid = true;
    opts.free_targets = true;
    opts.target_lo = -kInf;
    opts.target_hi = kInf;
    opts.bound_factor = bound_factor;
    AttainEncoding enc = encode_market(market, x, opts);
    for (std::size_t l = 0; l < tree.leaves().size(); ++l) {
      double w = leaf_weight(ps, tree, static_cast<int>(l));
      for (int k = 0; k < market.dim(); ++k)
        enc.prog.c[enc.g_off[l] + k] = w * ps.Z.at(tree.leaves()[l])[k];
    }
    return enc;
  };

  AttainEncoding probe = build(market.return_is_zero() ? 0.0 : 1e3);
  if (probe.prog.concave_ge0.empty() && probe.box == 0.0) {
    SolveResult res = solve_lp(probe.prog);
    if (res.status == SolveStatus::Unbounded) return {false, kInf};
    if (res.status != SolveStatus::Optimal)
      throw SolverFailure("support_value: LP did not solve");
    return {true, res.value};
  }
  SolveResult r1 = maximize_concave(probe.prog);
  AttainEncoding wide = build(2e3);
  SolveResult r2 = maximize_concave(wide.prog);
  if (r1.x.empty() || r2.x.empty())
    throw SolverFailure("support_value: concave solve failed");
  if (r2.value > r1.value + 1e-6 * (1.0 + std::abs(r1.value))) return {false, kInf};
  return {true, r2.value};
}

double superhedge_dual_bound(const std::vector<Vec>& leaf_claim, const Vec& x,
                             const MarketSpec& market,
                             const std::vector<PriceSystem>& candidates) {
  if (candidates.empty())
    throw ValidationError("superhedge_dual_bound: empty candidate list");
  if (static_cast<int>(x.size()) != market.dim())
    throw DimensionMismatch("superhedge_dual_bound: endowment size != d+N");
  Vec xI(market.N());
  for (int i = 0; i < market.N(); ++i) xI[i] = x[market.d() + i];
  double best = -kInf;
  for (const PriceSystem& ps : candidates) {
    if (!is_consistent(ps, market, 1e-9))
      throw ValidationError("InconsistentCandidate: consistency check failed");
    SupportValue a = support_value(xI, ps, market);
    if (!a.finite)
      throw ValidationError("InconsistentCandidate: infinite support value");
    double zf_x = 0.0;
    for (int k = 0; k < market.d(); ++k) zf_x += ps.Z.at(0)[k] * x[k];
    best = std::max(best, expected_claim_value(ps, market, leaf_claim) - zf_x - a.value);
  }
  return best;
}

SuperhedgeResult superhedge_price(const std::vector<Vec>& leaf_claim, const Vec& x_base,
                                  const MarketSpec& market, const Vec* direction,
                                  const Vec* lower_bound_shift) {
  const EventTree& tree = market.tree();
  if (leaf_claim.size() != tree.leaves().size())
    throw DimensionMismatch("superhedge_price: one claim vector per leaf required");
  Vec dir = direction ? *direction : unit(market.dim(), 0);

  // boundedness below in the terminal cone order
  SuperhedgeResult out;
  {
    Vec c;
    if (lower_bound_shift) {
      c = *lower_bound_shift;
    } else {
      c.assign(market.dim(), 0.0);
      for (const Vec& g : leaf_claim)
        for (int k = 0; k < market.dim(); ++k) c[k] = std::max(c[k], -g[k] + 1.0);
    }
    for (std::size_t l = 0; l < leaf_claim.size(); ++l)
      if (!cone_contains(market.cone(tree.leaves()[l]), add(leaf_claim[l], c)))
        throw ValidationError(
            "superhedge_price: claim not bounded below in the terminal cone order");
    out.bounded_below = true;
  }

  EncodeOptions opts;
  opts.solid = true;
  opts.targets = &leaf_claim;
  opts.superhedge_dir = &dir;
  opts.bound_factor = 1e3;
  AttainEncoding enc = encode_market(market, x_base, opts);
  enc.prog.c[enc.sh_var] = -1.0;  // minimize the shift

  SolveResult res = maximize_concave(enc.prog);
  if (res.status == SolveStatus::Infeasible || res.x.empty())
    throw SolverFailure("Unbounded: claim not reachable along the direction");
  double s = res.x[enc.sh_var];
  if (s >= enc.box - 1.0)
    throw SolverFailure("Unbounded: claim not reachable along the direction");
  if (s <= -enc.box + 1.0)
    throw SolverFailure("superhedge_price: shift hit the lower box bound");
  out.price = s;

  // certificate at the fixed optimal shift (same variable layout minus s)
  Vec x_shift = x_base;
  axpy(s, dir, x_shift);
  AttainEncoding enc2 = encode_attainability(market, x_shift, leaf_claim, true, 1e3);
  Vec sol(res.x.begin(), res.x.begin() + enc2.prog.n);
  out.plan = extract_plan(market, enc2, sol);
  return out;
}

ConsistentPriceResult find_strictly_consistent_price(const MarketSpec& market,
                                                     double min_margin) {
  PriceLP lp = build_price_lp(market, true, 0.0);
  SolveResult res = solve_lp(lp.prog);
  ConsistentPriceResult out;
  if (res.status == SolveStatus::Infeasible) return out;
  if (res.status != SolveStatus::Optimal)
    throw SolverFailure("find_strictly_consistent_price: margin LP did not solve");
  out.margin = res.value;
  out.system = price_from_solution(market, lp, res.x);
  out.found = out.margin > min_margin;
  return out;
}

std::vector<PriceSystem> enumerate_consistent_candidates(
    const MarketSpec& market, const std::vector<Vec>* leaf_claim) {
  const EventTree& tree = market.tree();
  std::vector<PriceSystem> out;
  auto try_add = [&](const PriceLP& lp, const SolveResult& res) {
    if (res.status != SolveStatus::Optimal) return;
    PriceSystem ps = price_from_solution(market, lp, res.x);
    if (is_consistent(ps, market, 1e-8)) out.push_back(std::move(ps));
  };

  {
    PriceLP lp = build_price_lp(market, true, 0.0);
    SolveResult res = solve_lp(lp.prog);
    try_add(lp, res);
  }
  const double delta0 = 1e-7;
  if (leaf_claim) {
    PriceLP lp = build_price_lp(market, false, delta0);
    for (std::size_t l = 0; l < tree.leaves().size(); ++l) {
      int leaf = tree.leaves()[l];
      for (int k = 0; k < market.dim(); ++k)
        lp.prog.c[lp.z_off[leaf] + k] = tree.prob(leaf) * (*leaf_claim)[l][k];
    }
    SolveResult res = solve_lp(lp.prog);
    try_add(lp, res);
  }
  for (std::size_t l = 0; l < tree.leaves().size(); ++l) {
    int leaf = tree.leaves()[l];
    for (int k = 0; k < market.dim(); ++k) {
      for (double sign : {1.0, -1.0}) {
        PriceLP lp = build_price_lp(market, false, delta0);
        lp.prog.c[lp.z_off[leaf] + k] = sign;
        SolveResult res = solve_lp(lp.prog);
        try_add(lp, res);
      }
    }
  }
  return out;
}

}  // namespace conic
