#include "conic/market.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace conic {

namespace {

constexpr double kGradClamp = 1e-7;  // evaluation shift for boundary slopes
constexpr double kSlopeCap = 1e8;

double cd_product(const Vec& gamma, const Vec& alpha) {
  double prod = 1.0;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (alpha[i] <= 0.0) return 0.0;
    prod *= std::pow(alpha[i], gamma[i]);
  }
  return prod;
}

}  // namespace

MarketSpec MarketSpec::build(EventTree tree, std::vector<PolyCone> cones, ReturnSpec ret,
                             std::optional<std::vector<Mat>> bidask) {
  const int nn = tree.num_nodes();
  const int dim = tree.dim();
  const int N = tree.asset_N();
  if (static_cast<int>(cones.size()) != nn)
    throw DimensionMismatch("MarketSpec: one cone per node required");
  for (int n = 0; n < nn; ++n) {
    if (cones[n].dim != dim)
      throw DimensionMismatch("MarketSpec: cone dimension != d+N at node " +
                              std::to_string(tree.id_at(n)));
    for (int i = 0; i < dim; ++i)
      if (!in_interior(cones[n], unit(dim, i)))
        throw ValidationError("MarketSpec: unit vector e" + std::to_string(i + 1) +
                              " not in the interior of the cone at node " +
                              std::to_string(tree.id_at(n)));
  }
  if (bidask && static_cast<int>(bidask->size()) != nn)
    throw DimensionMismatch("MarketSpec: one bid-ask matrix per node required");

  switch (ret.kind) {
    case ReturnSpec::Kind::Zero:
      break;
    case ReturnSpec::Kind::CobbDouglas: {
      if (N < 1) throw ValidationError("CobbDouglas return requires N >= 1");
      if (static_cast<int>(ret.cd.gamma.size()) != N)
        throw DimensionMismatch("CobbDouglas: gamma size != N");
      double gsum = 0.0;
      for (double g : ret.cd.gamma) {
        if (!(g > 0.0)) throw ValidationError("CobbDouglas: exponents must be > 0");
        gsum += g;
      }
      if (!(gsum < 1.0))
        throw ValidationError("CobbDouglas: exponent sum must be < 1");
      if (ret.cd.payout_coord < 0 || ret.cd.payout_coord >= tree.asset_d())
        throw ValidationError("CobbDouglas: payout coordinate out of range");
      if (static_cast<int>(ret.cd.p.size()) != nn ||
          static_cast<int>(ret.cd.eta.size()) != nn)
        throw DimensionMismatch("CobbDouglas: p and eta must be per-node");
      for (int n = 0; n < nn; ++n) {
        if (tree.time(n) == 0) continue;
        if (!(ret.cd.p[n] >= 0.0))
          throw ValidationError("CobbDouglas: negative output price");
        if (static_cast<int>(ret.cd.eta[n].size()) != N)
          throw DimensionMismatch("CobbDouglas: eta size != N");
      }
      break;
    }
    case ReturnSpec::Kind::Linear: {
      if (N < 1) throw ValidationError("Linear return requires N >= 1");
      if (static_cast<int>(ret.lin.M.size()) != nn)
        throw DimensionMismatch("Linear return: one matrix per node required");
      for (int n = 0; n < nn; ++n) {
        if (tree.time(n) == 0) continue;
        if (static_cast<int>(ret.lin.M[n].rows()) != dim ||
            static_cast<int>(ret.lin.M[n].cols()) != N)
          throw DimensionMismatch("Linear return: matrix must be (d+N) x N");
      }
      break;
    }
    case ReturnSpec::Kind::Oracle:
      if (!ret.oracle.value) throw ValidationError("Oracle return: missing value callback");
      break;
  }
  if (ret.perturbation) {
    if (!(ret.perturbation->epsilon > 0.0))
      throw ValidationError("Perturbation: epsilon must be > 0");
    if (static_cast<int>(ret.perturbation->w.size()) != nn)
      throw DimensionMismatch("Perturbation: one direction per node required");
    for (int n = 0; n < nn; ++n) {
      if (tree.time(n) == 0) continue;
      const Vec& w = ret.perturbation->w[n];
      if (static_cast<int>(w.size()) != dim)
        throw DimensionMismatch("Perturbation: direction dimension != d+N");
      for (int i = tree.asset_d(); i < dim; ++i)
        if (std::abs(w[i]) > 1e-12)
          throw ValidationError("Perturbation: direction must be purely financial");
    }
  }

  MarketSpec m;
  m.tree_ = std::move(tree);
  m.cones_ = std::move(cones);
  m.ret_ = std::move(ret);
  m.bidask_ = std::move(bidask);
  m.kbar_.reserve(nn);
  for (int n = 0; n < nn; ++n)
    m.kbar_.push_back(
        financial_restriction(m.cones_[n], m.tree_.asset_d(), m.tree_.asset_N()));
  return m;
}

Vec MarketSpec::eval_return(int node, const Vec& alpha) const {
  if (tree_.time(node) < 1)
    throw ValidationError("eval_return: returns accrue at nodes with t >= 1");
  if (static_cast<int>(alpha.size()) != N())
    throw DimensionMismatch("eval_return: alpha size != N");
  Vec out(dim(), 0.0);
  switch (ret_.kind) {
    case ReturnSpec::Kind::Zero:
      break;
    case ReturnSpec::Kind::CobbDouglas:
      out[ret_.cd.payout_coord] =
          ret_.cd.p[node] * cd_product(ret_.cd.gamma, alpha) - dot(ret_.cd.eta[node], alpha);
      break;
    case ReturnSpec::Kind::Linear: {
      const Mat& M = ret_.lin.M[node];
      for (int k = 0; k < dim(); ++k)
        for (int j = 0; j < N(); ++j) out[k] += M(k, j) * alpha[j];
      break;
    }
    case ReturnSpec::Kind::Oracle:
      out = ret_.oracle.value(node, alpha);
      if (static_cast<int>(out.size()) != dim())
        throw DimensionMismatch("eval_return: oracle value dimension != d+N");
      break;
  }
  if (ret_.perturbation) {
    double psi = std::min(1.0, norm1(alpha));
    axpy(ret_.perturbation->epsilon * psi, ret_.perturbation->w[node], out);
  }
  return out;
}

Mat MarketSpec::return_supergrad(int node, const Vec& alpha) const {
  if (tree_.time(node) < 1)
    throw ValidationError("return_supergrad: returns accrue at nodes with t >= 1");
  Mat G(dim(), N(), 0.0);
  switch (ret_.kind) {
    case ReturnSpec::Kind::Zero:
      break;
    case ReturnSpec::Kind::CobbDouglas: {
      Vec a = alpha;
      for (double& v : a) v = std::max(v, kGradClamp);
      double prod = cd_product(ret_.cd.gamma, a);
      for (int j = 0; j < N(); ++j) {
        double slope = ret_.cd.p[node] * ret_.cd.gamma[j] * prod / a[j];
        G(ret_.cd.payout_coord, j) = std::min(slope, kSlopeCap) - ret_.cd.eta[node][j];
      }
      break;
    }
    case ReturnSpec::Kind::Linear: {
      const Mat& M = ret_.lin.M[node];
      for (int k = 0; k < dim(); ++k)
        for (int j = 0; j < N(); ++j) G(k, j) = M(k, j);
      break;
    }
    case ReturnSpec::Kind::Oracle:
      if (!ret_.oracle.supergrad)
        throw ValidationError("return_supergrad: oracle has no supergradient callback");
      G = ret_.oracle.supergrad(node, alpha);
      break;
  }
  if (ret_.perturbation) {
    // subgradient of min(1, |alpha|_1) on the orthant
    double slope = norm1(alpha) < 1.0 ? 1.0 : 0.0;
    const Vec& w = ret_.perturbation->w[node];
    for (int k = 0; k < dim(); ++k)
      for (int j = 0; j < N(); ++j)
        G(k, j) += ret_.perturbation->epsilon * slope * w[k];
  }
  return G;
}

Vec investment_level(const MarketSpec& market, const TransferPlan& plan, int node) {
  const int d = market.d();
  Vec level(market.N(), 0.0);
  for (int m : market.tree().path(node))
    for (int i = 0; i < market.N(); ++i) level[i] += plan.xi.at(m)[d + i];
  return level;
}

namespace {

Vec alpha_at(const MarketSpec& market, const TransferPlan& plan, const Vec& x, int node) {
  // investment level feeding the return at `node`: endowment plus transfers
  // accumulated through the parent
  Vec a = investment_level(market, plan, market.tree().parent(node));
  for (int i = 0; i < market.N(); ++i) a[i] = std::max(a[i] + x[market.d() + i], 0.0);
  return a;
}

}  // namespace

bool is_admissible(const MarketSpec& market, const TransferPlan& plan, const Vec& x,
                   bool solid, double tol) {
  const EventTree& tree = market.tree();
  if (plan.xi.dim() != market.dim() || plan.xi.num_nodes() != tree.num_nodes())
    throw DimensionMismatch("is_admissible: plan shape mismatch");
  if (static_cast<int>(x.size()) != market.dim())
    throw DimensionMismatch("is_admissible: endowment size != d+N");
  const int t_max = solid ? tree.horizon() - 1 : tree.horizon();
  for (int n = 0; n < tree.num_nodes(); ++n) {
    if (!cone_contains(market.cone(n), scale(plan.xi.at(n), -1.0), tol)) return false;
    if (tree.time(n) > t_max) continue;
    Vec level = investment_level(market, plan, n);
    for (int i = 0; i < market.N(); ++i)
      if (level[i] + x[market.d() + i] < -tol) return false;
  }
  return true;
}

std::vector<Vec> terminal_wealth(const MarketSpec& market, const Vec& x,
                                 const TransferPlan& plan) {
  const EventTree& tree = market.tree();
  std::vector<Vec> out;
  out.reserve(tree.leaves().size());
  for (int leaf : tree.leaves()) {
    Vec w = x;
    for (int n : tree.path(leaf)) {
      w = add(w, plan.xi.at(n));
      if (tree.time(n) >= 1 && !market.return_is_zero())
        w = add(w, market.eval_return(n, alpha_at(market, plan, x, n)));
    }
    out.push_back(std::move(w));
  }
  return out;
}

namespace {

// gap in -Kbar means -gap in Kbar; an empty-generator Kbar is the zero cone
bool in_minus_kbar(const PolyCone& kbar, const Vec& gap, double tol) {
  if (kbar.gens.empty()) return norm_inf(gap) <= tol;
  return cone_contains(kbar, scale(gap, -1.0), tol);
}

}  // namespace

AxiomReport check_R_axioms(const MarketSpec& market, int sample_count, unsigned seed) {
  if (sample_count < 1) throw ValidationError("check_R_axioms: sample_count >= 1 required");
  AxiomReport rep;
  rep.r1 = rep.r2 = rep.r3 = rep.scaling = true;
  const EventTree& tree = market.tree();
  const int N = market.N();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto sample_alpha = [&] {
    Vec a(N);
    for (double& v : a) v = 3.0 * u01(rng);
    return a;
  };
  const double tol = 1e-7;

  for (int n = 0; n < tree.num_nodes(); ++n) {
    if (tree.time(n) < 1) continue;
    const int node_id = tree.id_at(n);
    Vec at_zero = market.eval_return(n, Vec(N, 0.0));
    if (norm_inf(at_zero) > 1e-10) {
      rep.r1 = false;
      rep.failures.push_back("R(0) != 0 at node " + std::to_string(node_id));
    }
    for (int s = 0; s < sample_count; ++s) {
      Vec a = sample_alpha();
      // continuity spot check
      Vec a2 = a;
      a2[s % N] += 1e-7;
      if (norm_inf(sub(market.eval_return(n, a2), market.eval_return(n, a))) > 1e-3) {
        rep.r1 = false;
        rep.failures.push_back("continuity spot check failed at node " +
                               std::to_string(node_id));
      }
      // concavity gap
      Vec b = sample_alpha();
      double lam = u01(rng);
      Vec mid(N);
      for (int i = 0; i < N; ++i) mid[i] = lam * a[i] + (1.0 - lam) * b[i];
      Vec gap = add(scale(market.eval_return(n, a), lam),
                    scale(market.eval_return(n, b), 1.0 - lam));
      gap = sub(gap, market.eval_return(n, mid));
      if (!in_minus_kbar(market.kbar(n), gap, tol)) {
        rep.r2 = false;
        rep.failures.push_back("concavity gap outside -Kbar at node " +
                               std::to_string(node_id));
      }
      // scaling relation
      double eta = 1.0 + 9.0 * u01(rng);
      Vec scaled = market.eval_return(n, scale(a, eta));
      Vec sgap = sub(scale(scaled, 1.0 / eta), market.eval_return(n, a));
      if (!in_minus_kbar(market.kbar(n), sgap, tol)) {
        rep.scaling = false;
        rep.failures.push_back("scaling relation failed at node " +
                               std::to_string(node_id));
      }
      // affine minorant
      if (market.ret().kind == ReturnSpec::Kind::Oracle) {
        if (!market.ret().minorant) {
          rep.r3 = false;
        } else {
          const Vec& a_t = market.ret().minorant->first[n];
          const Mat& L_t = market.ret().minorant->second[n];
          Vec v = add(market.eval_return(n, a), a_t);
          for (int k = 0; k < market.dim(); ++k)
            for (int j = 0; j < N; ++j) v[k] += L_t(k, j) * a[j];
          if (!all_nonneg(v, tol)) {
            rep.r3 = false;
            rep.failures.push_back("affine minorant violated at node " +
                                   std::to_string(node_id));
          }
        }
      }
    }
  }
  if (market.ret().kind == ReturnSpec::Kind::Oracle && !market.ret().minorant &&
      rep.failures.empty())
    rep.failures.push_back("no affine minorant provided for the oracle return");
  return rep;
}

TransferPlan convex_combine_plans(const MarketSpec& market, const TransferPlan& a,
                                  const TransferPlan& b, const Vec& x, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0))
    throw ValidationError("convex_combine_plans: eps must be in [0,1]");
  if (!is_admissible(market, a, x, false) || !is_admissible(market, b, x, false))
    throw ValidationError("NotAdmissible: both input plans must be admissible");
  const EventTree& tree = market.tree();
  TransferPlan out{AdaptedProcess(tree, market.dim())};
  for (int n = 0; n < tree.num_nodes(); ++n) {
    Vec xi = add(scale(a.xi.at(n), eps), scale(b.xi.at(n), 1.0 - eps));
    if (tree.time(n) >= 1 && !market.return_is_zero()) {
      // compensator: the convex combination of the individual rewards minus
      // the reward of the combined investment level, thrown away on the spot
      Vec alpha_mix(market.N());
      Vec aa = alpha_at(market, a, x, n);
      Vec ab = alpha_at(market, b, x, n);
      for (int i = 0; i < market.N(); ++i)
        alpha_mix[i] = eps * aa[i] + (1.0 - eps) * ab[i];
      Vec rho = add(scale(market.eval_return(n, aa), eps),
                    scale(market.eval_return(n, ab), 1.0 - eps));
      rho = sub(rho, market.eval_return(n, alpha_mix));
      xi = add(xi, rho);
    }
    out.xi.at(n) = std::move(xi);
  }
  return out;
}

AttainEncoding encode_market(const MarketSpec& market, const Vec& x,
                             const EncodeOptions& opts) {
  const EventTree& tree = market.tree();
  const int d = market.d();
  const int N = market.N();
  const int dim = market.dim();
  const int nn = tree.num_nodes();
  const int nl = static_cast<int>(tree.leaves().size());
  if (static_cast<int>(x.size()) != dim)
    throw DimensionMismatch("encode_market: endowment size != d+N");
  for (int i = 0; i < N; ++i)
    if (x[d + i] < 0.0)
      throw ValidationError("encode_market: industrial endowment must be >= 0");
  int closures = (opts.targets ? 1 : 0) + (opts.free_targets ? 1 : 0) +
                 (opts.consumption_vars ? 1 : 0);
  if (closures != 1)
    throw ValidationError("encode_market: exactly one leaf closure required");
  if (opts.targets && static_cast<int>(opts.targets->size()) != nl)
    throw DimensionMismatch("encode_market: one target per leaf required");
  if (opts.targets)
    for (const Vec& g : *opts.targets)
      if (static_cast<int>(g.size()) != dim)
        throw DimensionMismatch("encode_market: target size != d+N");
  if (opts.superhedge_dir && static_cast<int>(opts.superhedge_dir->size()) != dim)
    throw DimensionMismatch("encode_market: direction size != d+N");

  const bool reward = !market.return_is_zero();
  const bool reward_block = reward && market.ret().kind != ReturnSpec::Kind::Zero;
  const bool perturbed = market.ret().perturbation.has_value();
  const double pert_eps = perturbed ? market.ret().perturbation->epsilon : 0.0;

  AttainEncoding enc;
  enc.x = x;
  enc.solid = opts.solid;
  enc.xi_off.assign(nn, -1);
  enc.r_off.assign(nn, -1);
  enc.s_off.assign(nn, -1);
  enc.c_off.assign(nn, -1);
  enc.g_off.assign(nl, -1);

  int nv = 0;
  for (int n = 0; n < nn; ++n) {
    enc.xi_off[n] = nv;
    nv += dim;
    if (tree.time(n) >= 1 && reward_block) {
      enc.r_off[n] = nv;
      nv += dim;
    }
    if (tree.time(n) >= 1 && perturbed) {
      enc.s_off[n] = nv;
      nv += 1;
    }
    if (opts.consumption_vars) {
      enc.c_off[n] = nv;
      nv += d;
    }
  }
  if (opts.free_targets)
    for (int l = 0; l < nl; ++l) {
      enc.g_off[l] = nv;
      nv += dim;
    }
  if (opts.superhedge_dir) enc.sh_var = nv++;

  ConvexProgram& p = enc.prog;
  p.init(nv);

  double scale_hint = 1.0 + norm_inf(x);
  if (opts.targets)
    for (const Vec& g : *opts.targets) scale_hint = std::max(scale_hint, 1.0 + norm_inf(g));
  const double B = opts.bound_factor > 0.0 ? opts.bound_factor * scale_hint : 0.0;
  enc.box = B;

  const Vec* dir = opts.superhedge_dir;

  // per-node structure
  for (int n = 0; n < nn; ++n) {
    // -xi in K_n
    ConvexProgram::ConicBlock blk;
    for (int k = 0; k < dim; ++k) blk.idx.push_back(enc.xi_off[n] + k);
    blk.cone = market.cone(n);
    blk.sign = -1.0;
    p.cones.push_back(std::move(blk));

    if (B > 0.0)
      for (int k = 0; k < dim; ++k) {
        p.lo[enc.xi_off[n] + k] = -B;
        p.hi[enc.xi_off[n] + k] = B;
      }
    if (enc.c_off[n] >= 0)
      for (int k = 0; k < d; ++k) {
        p.lo[enc.c_off[n] + k] = 0.0;
        if (B > 0.0) p.hi[enc.c_off[n] + k] = B;
      }

    // running industrial level stays nonnegative
    const int t_max = opts.solid ? tree.horizon() - 1 : tree.horizon();
    if (tree.time(n) <= t_max) {
      std::vector<int> path = tree.path(n);
      for (int i = 0; i < N; ++i) {
        Vec row(nv, 0.0);
        for (int m : path) row[enc.xi_off[m] + d + i] = 1.0;
        if (dir) row[enc.sh_var] = (*dir)[d + i];
        p.add_ge(std::move(row), -x[d + i]);
      }
    }

    if (tree.time(n) >= 1 && reward) {
      std::vector<int> ppath = tree.path(tree.parent(n));
      // alpha_j as a row over the variables, constant part from x^I
      auto alpha_row = [&](int j, Vec& row, double coef) {
        for (int m : ppath) row[enc.xi_off[m] + d + j] += coef;
        if (dir) row[enc.sh_var] += coef * (*dir)[d + j];
      };
      auto alpha_const = [&](int j) { return x[d + j]; };

      if (enc.r_off[n] >= 0) {
        if (B > 0.0)
          for (int k = 0; k < dim; ++k) {
            p.lo[enc.r_off[n] + k] = -B;
            p.hi[enc.r_off[n] + k] = B;
          }
        switch (market.ret().kind) {
          case ReturnSpec::Kind::Zero:
            break;
          case ReturnSpec::Kind::CobbDouglas: {
            const int pay = market.ret().cd.payout_coord;
            for (int k = 0; k < dim; ++k)
              if (k != pay) {
                p.lo[enc.r_off[n] + k] = 0.0;
                p.hi[enc.r_off[n] + k] = 0.0;
              }
            const double pn = market.ret().cd.p[n];
            const Vec gamma = market.ret().cd.gamma;
            const Vec eta = market.ret().cd.eta[n];
            const int r_var = enc.r_off[n] + pay;
            auto xi_cols = [ppath, &enc, d](int j) {
              std::vector<int> cols;
              for (int m : ppath) cols.push_back(enc.xi_off[m] + d + j);
              return cols;
            };
            std::vector<std::vector<int>> cols(N);
            for (int j = 0; j < N; ++j) cols[j] = xi_cols(j);
            Vec consts(N);
            for (int j = 0; j < N; ++j) consts[j] = alpha_const(j);
            Vec dir_coefs(N, 0.0);
            if (dir)
              for (int j = 0; j < N; ++j) dir_coefs[j] = (*dir)[d + j];
            int sh = enc.sh_var;
            p.concave_ge0.push_back([pn, gamma, eta, cols, consts, dir_coefs, sh,
                                     r_var](const Vec& v, Vec* grad) {
              const int N = static_cast<int>(gamma.size());
              Vec alpha(N);
              for (int j = 0; j < N; ++j) {
                double a = consts[j];
                for (int c : cols[j]) a += v[c];
                if (sh >= 0) a += dir_coefs[j] * v[sh];
                alpha[j] = std::max(a, 0.0);
              }
              double prod = cd_product(gamma, alpha);
              double val = pn * prod - dot(eta, alpha) - v[r_var];
              if (grad) {
                grad->assign(v.size(), 0.0);
                Vec ac = alpha;
                for (double& z : ac) z = std::max(z, kGradClamp);
                double cprod = cd_product(gamma, ac);
                for (int j = 0; j < N; ++j) {
                  double slope =
                      std::min(pn * gamma[j] * cprod / ac[j], kSlopeCap) - eta[j];
                  for (int c : cols[j]) (*grad)[c] += slope;
                  if (sh >= 0) (*grad)[sh] += slope * dir_coefs[j];
                }
                (*grad)[r_var] = -1.0;
              }
              return val;
            });
            break;
          }
          case ReturnSpec::Kind::Linear: {
            const Mat& M = market.ret().lin.M[n];
            for (int k = 0; k < dim; ++k) {
              Vec row(nv, 0.0);
              row[enc.r_off[n] + k] = 1.0;
              double rhs = 0.0;
              for (int j = 0; j < N; ++j) {
                alpha_row(j, row, -M(k, j));
                rhs += M(k, j) * alpha_const(j);
              }
              p.add_eq(std::move(row), rhs);
            }
            break;
          }
          case ReturnSpec::Kind::Oracle:
            throw ValidationError(
                "encode_market: oracle returns are not encodable; use the "
                "linear or cobb_douglas form");
        }
      }

      if (enc.s_off[n] >= 0) {
        p.lo[enc.s_off[n]] = 0.0;
        p.hi[enc.s_off[n]] = 1.0;
        // s <= sum_j alpha_j
        Vec row(nv, 0.0);
        double rhs = 0.0;
        for (int j = 0; j < N; ++j) {
          alpha_row(j, row, 1.0);
          rhs -= alpha_const(j);
        }
        row[enc.s_off[n]] = -1.0;
        p.add_ge(std::move(row), rhs);
      }
    }
  }

  if (enc.sh_var >= 0 && B > 0.0) {
    p.lo[enc.sh_var] = -B;
    p.hi[enc.sh_var] = B;
  }
  if (opts.free_targets)
    for (int l = 0; l < nl; ++l)
      for (int k = 0; k < dim; ++k) {
        double lo = opts.target_lo, hi = opts.target_hi;
        if (B > 0.0) {
          lo = std::max(lo, -B);
          hi = std::min(hi, B);
        }
        p.lo[enc.g_off[l] + k] = lo;
        p.hi[enc.g_off[l] + k] = hi;
      }

  // leaf closure: x (+ s*dir) + sum xi + sum rewards = target
  for (int l = 0; l < nl; ++l) {
    const int leaf = tree.leaves()[l];
    std::vector<int> path = tree.path(leaf);
    for (int k = 0; k < dim; ++k) {
      Vec row(nv, 0.0);
      double rhs = -x[k];
      for (int m : path) {
        row[enc.xi_off[m] + k] = 1.0;
        if (enc.r_off[m] >= 0) row[enc.r_off[m] + k] = 1.0;
        if (enc.s_off[m] >= 0)
          row[enc.s_off[m]] += pert_eps * market.ret().perturbation->w[m][k];
        if (enc.c_off[m] >= 0 && k < d) row[enc.c_off[m] + k] = -1.0;
      }
      if (dir) row[enc.sh_var] += (*dir)[k];
      if (opts.targets) rhs += (*opts.targets)[l][k];
      if (opts.free_targets) row[enc.g_off[l] + k] = -1.0;
      p.add_eq(std::move(row), rhs);
    }
  }

  if (!p.concave_ge0.empty() && opts.bound_factor <= 0.0)
    throw ValidationError("encode_market: nonlinear returns require finite box bounds");
  return enc;
}

AttainEncoding encode_attainability(const MarketSpec& market, const Vec& x,
                                    const std::vector<Vec>& leaf_targets, bool solid,
                                    double bound_factor) {
  EncodeOptions opts;
  opts.solid = solid;
  opts.bound_factor = bound_factor;
  opts.targets = &leaf_targets;
  return encode_market(market, x, opts);
}

AttainEncoding encode_consumption(const MarketSpec& market, const Vec& x,
                                  const ConsumptionPlan& c) {
  const EventTree& tree = market.tree();
  if (c.c.dim() != market.d() || c.c.num_nodes() != tree.num_nodes())
    throw DimensionMismatch("encode_consumption: plan shape mismatch");
  std::vector<Vec> targets;
  for (int leaf : tree.leaves()) {
    Vec g(market.dim(), 0.0);
    for (int m : tree.path(leaf))
      for (int k = 0; k < market.d(); ++k) {
        if (c.c.at(m)[k] < 0.0)
          throw ValidationError("encode_consumption: consumption must be >= 0");
        g[k] += c.c.at(m)[k];
      }
    targets.push_back(std::move(g));
  }
  return encode_attainability(market, x, targets, false);
}

TransferPlan extract_plan(const MarketSpec& market, const AttainEncoding& enc,
                          const Vec& solution) {
  const EventTree& tree = market.tree();
  const int d = market.d();
  TransferPlan plan{AdaptedProcess(tree, market.dim())};
  for (int n = 0; n < tree.num_nodes(); ++n)
    for (int k = 0; k < market.dim(); ++k)
      plan.xi.at(n)[k] = solution[enc.xi_off[n] + k];
  if (market.return_is_zero()) return plan;

  Vec x = enc.x;
  if (enc.sh_var >= 0) {
    // callers using a direction variable bake it into the endowment themselves
    throw ValidationError("extract_plan: resolve the direction variable first");
  }
  const auto& pert = market.ret().perturbation;
  for (int n = 0; n < tree.num_nodes(); ++n) {
    if (tree.time(n) < 1) continue;
    Vec alpha(market.N());
    Vec level = investment_level(market, plan, tree.parent(n));
    for (int i = 0; i < market.N(); ++i)
      alpha[i] = std::max(level[i] + x[d + i], 0.0);
    Vec actual = market.eval_return(n, alpha);
    Vec encoded(market.dim(), 0.0);
    if (enc.r_off[n] >= 0)
      for (int k = 0; k < market.dim(); ++k) encoded[k] = solution[enc.r_off[n] + k];
    if (enc.s_off[n] >= 0)
      axpy(pert->epsilon * solution[enc.s_off[n]], pert->w[n], encoded);
    // dispose the surplus so the realized reward matches the encoded one
    Vec surplus = sub(actual, encoded);
    for (int i = d; i < market.dim(); ++i)
      if (surplus[i] < -1e-7)
        throw SolverFailure("extract_plan: industrial reward deficit; encoding unsound");
    plan.xi.at(n) = sub(plan.xi.at(n), surplus);
  }
  return plan;
}

namespace {

bool solve_feasibility(const MarketSpec& market, AttainEncoding& enc, Vec* solution) {
  ConvexProgram& p = enc.prog;
  if (p.concave_ge0.empty()) {
    SolveResult res = solve_lp(p);
    if (res.status != SolveStatus::Optimal) return false;
    if (solution) *solution = res.x;
    return true;
  }
  // maximize the worst oracle slack t; feasible iff the optimum is >= -tol
  ConvexProgram q = p;
  const int t_var = q.n;
  q.n += 1;
  q.lo.push_back(-1e6);
  q.hi.push_back(1.0);
  q.c.push_back(1.0);
  for (auto& row : q.Aeq) row.resize(q.n, 0.0);
  for (auto& row : q.Ain) row.resize(q.n, 0.0);
  for (double& cv : q.c) cv = 0.0;
  q.c[t_var] = 1.0;
  std::vector<ConcaveOracle> shifted;
  for (const auto& f : q.concave_ge0)
    shifted.push_back([f, t_var](const Vec& v, Vec* grad) {
      double val = f(v, grad) - v[t_var];
      if (grad) {
        grad->resize(v.size(), 0.0);
        (*grad)[t_var] -= 1.0;
      }
      return val;
    });
  q.concave_ge0 = std::move(shifted);
  SolveOptions opt;
  opt.nl_tol = 1e-9;
  opt.gap_tol = 1e-9;
  SolveResult res = maximize_concave(q, opt);
  if (res.status == SolveStatus::Infeasible) return false;
  if (res.x.empty()) return false;
  if (res.value < -1e-7) return false;
  if (solution) {
    *solution = res.x;
    solution->resize(p.n);
  }
  return true;
}

}  // namespace

bool is_attainable(const MarketSpec& market, const Vec& x,
                   const std::vector<Vec>& leaf_targets, bool solid,
                   TransferPlan* witness, double bound_factor) {
  AttainEncoding enc = encode_attainability(market, x, leaf_targets, solid, bound_factor);
  Vec sol;
  if (!solve_feasibility(market, enc, witness ? &sol : nullptr)) return false;
  if (witness) *witness = extract_plan(market, enc, sol);
  return true;
}

bool is_consumable(const MarketSpec& market, const Vec& x, const ConsumptionPlan& c,
                   TransferPlan* witness) {
  AttainEncoding enc = encode_consumption(market, x, c);
  Vec sol;
  if (!solve_feasibility(market, enc, witness ? &sol : nullptr)) return false;
  if (witness) *witness = extract_plan(market, enc, sol);
  return true;
}

}  // namespace conic
