#include "conic/utility.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace conic {

namespace {
constexpr double kBarrier = 1e-9;  // Log-domain lower bound inside programs
constexpr double kSlopeClamp = 1e-9;
}  // namespace

double utility1_value(const Utility1D& u, double c) {
  if (u.kind == Utility1D::Kind::Log) {
    if (c <= 0.0) return -kInf;
    return u.weight * std::log(c) + u.constant;
  }
  if (c < 0.0) return -kInf;
  return u.weight * std::pow(c, u.p) / u.p + u.constant;
}

double utility1_slope(const Utility1D& u, double c) {
  double cc = std::max(c, kSlopeClamp);
  if (u.kind == Utility1D::Kind::Log) return u.weight / cc;
  return u.weight * std::pow(cc, u.p - 1.0);
}

double fenchel1(const Utility1D& u, double y) {
  if (y <= 0.0) return kInf;
  double z = y / u.weight;
  if (u.kind == Utility1D::Kind::Log)
    return u.weight * (-std::log(z) - 1.0) + u.constant;
  double conj = ((1.0 - u.p) / u.p) * std::pow(z, u.p / (u.p - 1.0));
  return u.weight * conj + u.constant;
}

double truncated_fenchel1(const Utility1D& u, double y, double n) {
  if (n <= 0.0) throw ValidationError("truncated_fenchel1: n > 0 required");
  double cstar;
  if (y <= 0.0) {
    cstar = n;
  } else if (u.kind == Utility1D::Kind::Log) {
    cstar = std::min(u.weight / y, n);
  } else {
    cstar = std::min(std::pow(y / u.weight, 1.0 / (u.p - 1.0)), n);
  }
  return utility1_value(u, cstar) - cstar * y;
}

namespace {

const UtilityStage& stage_at(const UtilityFamily& U, int t) {
  if (t < 0 || t >= static_cast<int>(U.stages.size()))
    throw ValidationError("utility: no stage at time " + std::to_string(t));
  const UtilityStage& st = U.stages[t];
  if (st.coord.empty()) throw ValidationError("utility: empty stage");
  return st;
}

}  // namespace

double utility_value(const UtilityFamily& U, int t, const Vec& c) {
  const UtilityStage& st = stage_at(U, t);
  for (double v : c)
    if (v < 0.0) return -kInf;
  if (st.variant == UtilityStage::Variant::FirstCoordinate)
    return utility1_value(st.coord[0], c[0]);
  if (st.coord.size() != c.size())
    throw DimensionMismatch("utility_value: stage arity != consumption dimension");
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double v = utility1_value(st.coord[i], c[i]);
    if (v == -kInf) return -kInf;
    s += v;
  }
  return s;
}

Vec utility_supergradient(const UtilityFamily& U, int t, const Vec& c) {
  const UtilityStage& st = stage_at(U, t);
  Vec g(c.size(), 0.0);
  if (st.variant == UtilityStage::Variant::FirstCoordinate) {
    g[0] = utility1_slope(st.coord[0], c[0]);
    return g;
  }
  for (std::size_t i = 0; i < c.size(); ++i) g[i] = utility1_slope(st.coord[i], c[i]);
  return g;
}

double fenchel(const UtilityFamily& U, int t, const Vec& y) {
  const UtilityStage& st = stage_at(U, t);
  if (st.variant == UtilityStage::Variant::FirstCoordinate) {
    for (std::size_t i = 1; i < y.size(); ++i)
      if (y[i] < 0.0) return kInf;
    return fenchel1(st.coord[0], y[0]);
  }
  if (st.coord.size() != y.size())
    throw DimensionMismatch("fenchel: stage arity != dual dimension");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double v = fenchel1(st.coord[i], y[i]);
    if (v == kInf) return kInf;
    s += v;
  }
  return s;
}

double truncated_fenchel(const UtilityFamily& U, int t, const Vec& y, double n) {
  const UtilityStage& st = stage_at(U, t);
  if (st.variant == UtilityStage::Variant::FirstCoordinate) {
    double s = truncated_fenchel1(st.coord[0], y[0], n);
    for (std::size_t i = 1; i < y.size(); ++i)
      if (y[i] < 0.0) s += -n * y[i];
    return s;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    s += truncated_fenchel1(st.coord[i], y[i], n);
  return s;
}

GrowthReport check_growth_condition(const UtilityFamily& U, int t,
                                    const std::vector<double>& lambdas,
                                    const std::vector<double>& grid) {
  if (lambdas.empty() || grid.empty())
    throw ValidationError("check_growth_condition: empty lambda list or grid");
  const UtilityStage& st = stage_at(U, t);
  const int dim = st.variant == UtilityStage::Variant::FirstCoordinate
                      ? 1
                      : static_cast<int>(st.coord.size());
  auto ratio_sup = [&](double lambda, const std::vector<double>& pts) {
    double C = 0.0;
    for (double r : pts) {
      Vec y(dim, r), ly(dim, lambda * r);
      double num = fenchel(U, t, ly);
      double den = 1.0 + std::max(fenchel(U, t, y), 0.0);
      if (num == kInf) return kInf;
      C = std::max(C, num / den);
    }
    return C;
  };
  std::vector<double> refined = grid;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    refined.push_back(std::sqrt(grid[i] * grid[i + 1]));
  double gmin = *std::min_element(grid.begin(), grid.end());
  refined.push_back(gmin / 2.0);
  refined.push_back(gmin / 4.0);

  GrowthReport rep;
  for (double lambda : lambdas) {
    GrowthReport::PerLambda row;
    row.lambda = lambda;
    row.C = ratio_sup(lambda, grid);
    row.refined_C = ratio_sup(lambda, refined);
    row.pass = std::isfinite(row.refined_C) &&
               std::abs(row.refined_C - row.C) <= 0.10 * std::max(row.C, 1e-12);
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

double asymptotic_elasticity(const Utility1D& u) {
  if (u.kind == Utility1D::Kind::Power) return u.p;
  return 0.0;
}

PrimalResult solve_primal(const MarketSpec& market, const UtilityFamily& U,
                          const Vec& x, const SolveOptions& opt) {
  const EventTree& tree = market.tree();
  if (static_cast<int>(U.stages.size()) < tree.horizon() + 1)
    throw ValidationError("solve_primal: one utility stage per time required");
  const int d = market.d();

  EncodeOptions eopts;
  eopts.solid = false;
  eopts.consumption_vars = true;
  eopts.bound_factor = 1e3;
  AttainEncoding enc = encode_market(market, x, eopts);

  std::vector<int> log_vars;
  for (int n = 0; n < tree.num_nodes(); ++n) {
    const UtilityStage& st = stage_at(U, tree.time(n));
    for (int i = 0; i < d; ++i) {
      const Utility1D* u1 = nullptr;
      if (st.variant == UtilityStage::Variant::FirstCoordinate) {
        if (i == 0) u1 = &st.coord[0];
      } else {
        u1 = &st.coord[i];
      }
      if (u1 && u1->kind == Utility1D::Kind::Log)
        log_vars.push_back(enc.c_off[n] + i);
    }
  }

  // the oracle clamps consumption at the active domain bound so that Log
  // stays finite even when the LP returns a point slightly below it
  const Vec* lo = &enc.prog.lo;
  enc.prog.objective = [&market, &U, &tree, enc_c = enc.c_off, d, lo](const Vec& v,
                                                                     Vec* grad) {
    if (grad) grad->assign(v.size(), 0.0);
    double total = 0.0;
    for (int n = 0; n < tree.num_nodes(); ++n) {
      Vec c(d);
      for (int i = 0; i < d; ++i)
        c[i] = std::max({v[enc_c[n] + i], (*lo)[enc_c[n] + i], 0.0});
      double val = utility_value(U, tree.time(n), c);
      total += tree.prob(n) * val;
      if (grad) {
        Vec g = utility_supergradient(U, tree.time(n), c);
        for (int i = 0; i < d; ++i) (*grad)[enc_c[n] + i] = tree.prob(n) * g[i];
      }
    }
    return total;
  };

  // The Log domain bound starts coarse so that oracle slopes stay moderate;
  // it is tightened only while it binds at the reported optimum.
  PrimalResult out;
  SolveResult res;
  double level = kBarrier;
  for (double lvl : {1e-3, 1e-6, kBarrier}) {
    level = lvl;
    for (int v : log_vars) enc.prog.lo[v] = lvl;
    res = maximize_concave(enc.prog, opt);
    if (res.status == SolveStatus::Infeasible || res.x.empty()) continue;
    bool active = false;
    for (int v : log_vars) active = active || res.x[v] <= 2.0 * lvl;
    if (!active) break;
  }
  out.status = res.status;
  out.gap = res.gap;
  if (res.status == SolveStatus::Infeasible || res.x.empty()) {
    out.feasible = false;
    out.finite = false;
    out.value = -kInf;
    return out;
  }
  out.feasible = true;
  out.consumption = ConsumptionPlan{AdaptedProcess(tree, d)};
  for (int n = 0; n < tree.num_nodes(); ++n)
    for (int i = 0; i < d; ++i)
      out.consumption.c.at(n)[i] = std::max(res.x[enc.c_off[n] + i], 0.0);
  out.plan = extract_plan(market, enc, res.x);

  if (res.value > 1e9) {
    out.finite = false;
    out.value = kInf;
    return out;
  }
  // the domain bound must be inactive on Log coordinates at the optimum
  for (int v : log_vars)
    if (res.x[v] <= 2.0 * level) {
      out.finite = false;
      out.value = -kInf;
      return out;
    }
  out.finite = true;
  out.value = res.value;
  return out;
}

PrimalResult solve_u1(const MarketSpec& market, const UtilityFamily& U, double x1,
                      const SolveOptions& opt) {
  if (x1 < 0.0) throw ValidationError("solve_u1: x^1 >= 0 required");
  Vec x(market.dim(), 0.0);
  x[0] = x1;
  return solve_primal(market, U, x, opt);
}

namespace {

struct DualEval {
  bool ok = false;
  double value = kInf;
  double alpha = 0.0;
  double scale = 0.0;
};

DualEval eval_dual_candidate(const MarketSpec& market, const UtilityFamily& U,
                             double y1, const PriceSystem& ps) {
  DualEval ev;
  if (!is_consistent(ps, market, 1e-9)) return ev;
  SupportValue a = support_value(Vec(market.N(), 0.0), ps, market);
  if (!a.finite) return ev;
  double z01 = ps.Z.at(0)[0];
  if (z01 <= 0.0) return ev;
  ev.scale = y1 / z01;
  ev.alpha = ev.scale * a.value;
  const EventTree& tree = market.tree();
  double total = 0.0;
  for (int n = 0; n < tree.num_nodes(); ++n) {
    Vec y(market.d());
    for (int k = 0; k < market.d(); ++k) y[k] = ev.scale * ps.Z.at(n)[k];
    double f = fenchel(U, tree.time(n), y);
    if (f == kInf) return ev;
    total += tree.prob(n) * f;
  }
  ev.value = total + ev.alpha;
  ev.ok = true;
  return ev;
}

PriceSystem blend(const EventTree& tree, int dim, const PriceSystem& a,
                  const PriceSystem& b, double theta) {
  PriceSystem ps;
  ps.Z = AdaptedProcess(tree, dim);
  for (int n = 0; n < tree.num_nodes(); ++n)
    for (int k = 0; k < dim; ++k)
      ps.Z.at(n)[k] = theta * a.Z.at(n)[k] + (1.0 - theta) * b.Z.at(n)[k];
  return ps;
}

}  // namespace

DualResult solve_dual(const MarketSpec& market, const UtilityFamily& U, double y1,
                      const std::vector<PriceSystem>& candidates) {
  DualResult out;
  if (y1 <= 0.0) {
    out.finite = false;
    out.value = kInf;
    return out;
  }
  if (candidates.empty())
    throw ValidationError("NoFiniteCandidate: empty candidate list");

  int best = -1, second = -1;
  double best_v = kInf, second_v = kInf;
  std::vector<DualEval> evals(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    evals[i] = eval_dual_candidate(market, U, y1, candidates[i]);
    if (!evals[i].ok) continue;
    if (evals[i].value < best_v) {
      second = best;
      second_v = best_v;
      best = static_cast<int>(i);
      best_v = evals[i].value;
    } else if (evals[i].value < second_v) {
      second = static_cast<int>(i);
      second_v = evals[i].value;
    }
  }
  if (best < 0) throw ValidationError("NoFiniteCandidate: no usable candidate");

  PriceSystem best_ps = candidates[best];
  DualEval best_ev = evals[best];
  if (second >= 0) {
    // ternary line search between the two best systems (convex combinations
    // of consistent systems stay consistent)
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 30; ++it) {
      double m1 = lo + (hi - lo) / 3.0;
      double m2 = hi - (hi - lo) / 3.0;
      PriceSystem p1 = blend(market.tree(), market.dim(), candidates[best],
                             candidates[second], 1.0 - m1);
      PriceSystem p2 = blend(market.tree(), market.dim(), candidates[best],
                             candidates[second], 1.0 - m2);
      DualEval e1 = eval_dual_candidate(market, U, y1, p1);
      DualEval e2 = eval_dual_candidate(market, U, y1, p2);
      double v1 = e1.ok ? e1.value : kInf;
      double v2 = e2.ok ? e2.value : kInf;
      if (v1 <= v2) {
        hi = m2;
        if (v1 < best_v) {
          best_v = v1;
          best_ps = p1;
          best_ev = e1;
        }
      } else {
        lo = m1;
        if (v2 < best_v) {
          best_v = v2;
          best_ps = p2;
          best_ev = e2;
        }
      }
    }
  }

  out.finite = true;
  out.value = best_v;
  out.best.Z = best_ps;
  out.best.y1 = y1;
  out.best.scale = best_ev.scale;
  out.best.alpha = best_ev.alpha;
  return out;
}

GapReport duality_gap(const MarketSpec& market, const UtilityFamily& U,
                      const std::vector<double>& y_grid,
                      const std::vector<double>& x_grid) {
  if (y_grid.empty() || x_grid.empty())
    throw ValidationError("duality_gap: empty grid");
  std::vector<double> u1(x_grid.size());
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    PrimalResult pr = solve_u1(market, U, x_grid[i]);
    u1[i] = pr.finite ? pr.value : (pr.feasible ? -kInf : -kInf);
  }
  std::vector<PriceSystem> candidates = enumerate_consistent_candidates(market);

  GapReport rep;
  for (double y : y_grid) {
    GapReport::Row row;
    row.y = y;
    row.w_y = -kInf;
    for (std::size_t i = 0; i < x_grid.size(); ++i)
      if (u1[i] > -kInf) row.w_y = std::max(row.w_y, u1[i] - x_grid[i] * y);
    DualResult dr = solve_dual(market, U, y, candidates);
    row.dual_y = dr.value;
    row.gap = row.dual_y - row.w_y;
    if (row.gap < -1e-7) rep.weak_duality_ok = false;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace conic
