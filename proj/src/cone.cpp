#include "conic/cone.hpp"

#include <algorithm>
#include <cmath>

#include "conic/solve.hpp"

namespace conic {

PolyCone PolyCone::from_generators(int dim, std::vector<Vec> generators) {
  PolyCone cone;
  cone.dim = dim;
  for (auto& g : generators) {
    if (static_cast<int>(g.size()) != dim)
      throw DimensionMismatch("generator dimension mismatch");
    if (norm_inf(g) > 0.0) cone.gens.push_back(std::move(g));
  }
  if (cone.gens.empty())
    throw ValidationError("cone requires at least one nonzero generator");
  return cone;
}

PolyCone PolyCone::from_bid_ask(const Mat& pi) {
  const int m = static_cast<int>(pi.rows());
  if (pi.cols() != pi.rows()) throw DimensionMismatch("bid-ask matrix must be square");
  std::vector<Vec> gens;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      double v = pi(i, j);
      if (!(v > 0.0) || !std::isfinite(v))
        throw ValidationError("NonPositiveEntry: pi[" + std::to_string(i) + "][" +
                              std::to_string(j) + "]");
      if (i == j && v != 1.0)
        throw ValidationError("BadDiagonal: pi[" + std::to_string(i) + "][" +
                              std::to_string(i) + "] must be 1");
    }
    gens.push_back(unit(m, i));
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      Vec g(m, 0.0);
      g[i] = pi(i, j);
      g[j] = -1.0;
      gens.push_back(std::move(g));
    }
  return from_generators(m, std::move(gens));
}

bool cone_contains(const PolyCone& cone, const Vec& x, double tol) {
  if (static_cast<int>(x.size()) != cone.dim)
    throw DimensionMismatch("cone_contains: point dimension mismatch");
  // feasibility of G lambda = x, lambda >= 0, allowing a tol-sized residual
  ConvexProgram p;
  const int ng = static_cast<int>(cone.gens.size());
  p.init(ng);
  for (int g = 0; g < ng; ++g) p.lo[g] = 0.0;
  for (int r = 0; r < cone.dim; ++r) {
    Vec row(ng);
    for (int g = 0; g < ng; ++g) row[g] = cone.gens[g][r];
    p.add_eq(std::move(row), x[r]);
  }
  SolveResult res = solve_lp(p);
  if (res.status == SolveStatus::Optimal || res.status == SolveStatus::Unbounded) {
    // verify the residual explicitly
    Vec y(cone.dim, 0.0);
    for (int g = 0; g < ng; ++g) axpy(res.x[g], cone.gens[g], y);
    return norm_inf(sub(y, x)) <= tol * (1.0 + norm_inf(x));
  }
  return false;
}

bool dual_contains(const PolyCone& cone, const Vec& y, double tol) {
  if (static_cast<int>(y.size()) != cone.dim)
    throw DimensionMismatch("dual_contains: point dimension mismatch");
  for (const Vec& g : cone.gens)
    if (dot(y, g) < -tol * (1.0 + norm_inf(g))) return false;
  return true;
}

namespace {

// max delta s.t. x + delta*dir_k in cone for every direction; one LP.
double perturbation_margin(const PolyCone& cone, const Vec& x,
                           const std::vector<Vec>& dirs) {
  const int ng = static_cast<int>(cone.gens.size());
  const int nd = static_cast<int>(dirs.size());
  ConvexProgram p;
  p.init(1 + nd * ng);  // delta, then lambda blocks
  p.lo[0] = 0.0;
  p.hi[0] = 1.0;
  for (int v = 1; v < p.n; ++v) p.lo[v] = 0.0;
  for (int k = 0; k < nd; ++k) {
    for (int r = 0; r < cone.dim; ++r) {
      Vec row(p.n, 0.0);
      row[0] = -dirs[k][r];
      for (int g = 0; g < ng; ++g) row[1 + k * ng + g] = cone.gens[g][r];
      p.add_eq(std::move(row), x[r]);
    }
  }
  p.c[0] = 1.0;
  SolveResult res = solve_lp(p);
  if (res.status != SolveStatus::Optimal) return -1.0;
  return res.value;
}

}  // namespace

bool in_interior(const PolyCone& cone, const Vec& x, const ConeTols& tols) {
  if (static_cast<int>(x.size()) != cone.dim)
    throw DimensionMismatch("in_interior: point dimension mismatch");
  std::vector<Vec> dirs;
  for (int i = 0; i < cone.dim; ++i) {
    dirs.push_back(unit(cone.dim, i));
    dirs.push_back(scale(unit(cone.dim, i), -1.0));
  }
  return perturbation_margin(cone, x, dirs) > tols.interior;
}

bool in_relative_interior(const PolyCone& cone, const Vec& x, const ConeTols& tols) {
  if (static_cast<int>(x.size()) != cone.dim)
    throw DimensionMismatch("in_relative_interior: point dimension mismatch");
  std::vector<Vec> span = orthonormal_basis(cone.gens, tols.rank);
  // x must lie in the span
  Vec resid = x;
  for (const Vec& q : span) axpy(-dot(q, resid), q, resid);
  if (norm_inf(resid) > tols.membership * (1.0 + norm_inf(x))) return false;
  std::vector<Vec> dirs;
  for (const Vec& q : span) {
    dirs.push_back(q);
    dirs.push_back(scale(q, -1.0));
  }
  return perturbation_margin(cone, x, dirs) > tols.interior;
}

std::vector<Vec> lineality(const PolyCone& cone) {
  std::vector<Vec> reversible;
  for (const Vec& g : cone.gens)
    if (cone_contains(cone, scale(g, -1.0))) reversible.push_back(g);
  return orthonormal_basis(reversible);
}

bool in_lineality(const PolyCone& cone, const Vec& v, double tol) {
  std::vector<Vec> basis = lineality(cone);
  Vec resid = v;
  for (const Vec& q : basis) axpy(-dot(q, resid), q, resid);
  return norm_inf(resid) <= tol;
}

PolyCone financial_part(const PolyCone& cone, int d, int N) {
  if (cone.dim != d + N) throw DimensionMismatch("financial_part: dim != d+N");
  std::vector<Vec> gens;
  bool any = false;
  for (const Vec& g : cone.gens) {
    Vec h = g;
    for (int i = d; i < d + N; ++i) h[i] = 0.0;
    if (norm_inf(h) > 0.0) any = true;
    gens.push_back(std::move(h));
  }
  if (!any) {
    // image is the zero cone; keep a zero-like representation via a single
    // zero generator is disallowed, so return the degenerate ray {0} as an
    // empty-span cone marker
    PolyCone z;
    z.dim = d + N;
    z.gens = {};
    return z;
  }
  PolyCone out;
  out.dim = d + N;
  for (auto& g : gens)
    if (norm_inf(g) > 0.0) out.gens.push_back(std::move(g));
  return out;
}

namespace {

// all nonnegative kernel directions of the industrial-row matrix over one
// generator support, appended as combined generators
void add_support_rays(const PolyCone& cone, int d, int N,
                      const std::vector<int>& support, std::vector<Vec>& out) {
  const int k = static_cast<int>(support.size());
  // rows of the industrial block restricted to the support, in R^k
  std::vector<Vec> rows(N, Vec(k, 0.0));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < k; ++j) rows[i][j] = cone.gens[support[j]][d + i];
  std::vector<Vec> row_span = orthonormal_basis(rows);
  std::vector<Vec> kernel;
  for (int j = 0; j < k; ++j) {
    Vec e = unit(k, j);
    for (const Vec& q : row_span) axpy(-dot(q, e), q, e);
    for (const Vec& q : kernel) axpy(-dot(q, e), q, e);
    double n = norm2(e);
    if (n > 1e-10) kernel.push_back(scale(e, 1.0 / n));
  }
  if (kernel.size() != 1) return;  // minimal supports only; larger kernels
                                   // are covered by smaller supports
  for (double sign : {1.0, -1.0}) {
    Vec lam = scale(kernel[0], sign);
    if (!all_nonneg(lam, 1e-12)) continue;
    Vec g(cone.dim, 0.0);
    for (int j = 0; j < k; ++j) axpy(std::max(lam[j], 0.0), cone.gens[support[j]], g);
    for (int i = d; i < cone.dim; ++i) g[i] = 0.0;  // exact zero on the slice
    if (norm_inf(g) > 1e-12) out.push_back(std::move(g));
    break;
  }
}

void enumerate_supports(const PolyCone& cone, int d, int N,
                        const std::vector<int>& pool, std::vector<int>& current,
                        std::size_t start, std::size_t max_size,
                        std::vector<Vec>& out) {
  if (current.size() >= 2) add_support_rays(cone, d, N, current, out);
  if (current.size() == max_size) return;
  for (std::size_t i = start; i < pool.size(); ++i) {
    current.push_back(pool[i]);
    enumerate_supports(cone, d, N, pool, current, i + 1, max_size, out);
    current.pop_back();
  }
}

}  // namespace

PolyCone financial_restriction(const PolyCone& cone, int d, int N) {
  if (cone.dim != d + N) throw DimensionMismatch("financial_restriction: dim != d+N");
  if (N == 0) return cone;
  std::vector<Vec> gens;
  std::vector<int> mixed;
  for (std::size_t i = 0; i < cone.gens.size(); ++i) {
    double indnorm = 0.0;
    for (int j = d; j < cone.dim; ++j)
      indnorm = std::max(indnorm, std::abs(cone.gens[i][j]));
    if (indnorm <= 1e-12 * (1.0 + norm_inf(cone.gens[i])))
      gens.push_back(cone.gens[i]);
    else
      mixed.push_back(static_cast<int>(i));
  }
  std::vector<int> current;
  enumerate_supports(cone, d, N, mixed, current, 0,
                     static_cast<std::size_t>(N) + 1, gens);
  PolyCone out;
  out.dim = cone.dim;
  for (auto& g : gens)
    if (norm_inf(g) > 0.0) out.gens.push_back(std::move(g));
  return out;
}

bool in_dual_relative_interior(const PolyCone& cone, const Vec& y, double margin,
                               double tol) {
  std::vector<Vec> lin = lineality(cone);
  auto in_lin = [&](const Vec& g) {
    Vec resid = g;
    for (const Vec& q : lin) axpy(-dot(q, resid), q, resid);
    return norm_inf(resid) <= 1e-9 * (1.0 + norm_inf(g));
  };
  for (const Vec& g : cone.gens) {
    double v = dot(y, g);
    if (in_lin(g)) {
      if (std::abs(v) > tol * (1.0 + norm_inf(g))) return false;
    } else {
      if (v < margin * norm2(g)) return false;
    }
  }
  return true;
}

Vec relative_interior_point(const PolyCone& cone) {
  const int ng = static_cast<int>(cone.gens.size());
  if (ng == 0) throw ValidationError("relative_interior_point: empty cone");
  // max delta s.t. mu_g >= delta, sum mu = 1; w = sum mu_g ghat_g
  ConvexProgram p;
  p.init(1 + ng);
  p.lo[0] = 0.0;
  p.hi[0] = 1.0;
  for (int g = 0; g < ng; ++g) p.lo[1 + g] = 0.0;
  {
    Vec row(p.n, 0.0);
    for (int g = 0; g < ng; ++g) row[1 + g] = 1.0;
    p.add_eq(std::move(row), 1.0);
  }
  for (int g = 0; g < ng; ++g) {
    Vec row(p.n, 0.0);
    row[0] = -1.0;
    row[1 + g] = 1.0;
    p.add_ge(std::move(row), 0.0);
  }
  p.c[0] = 1.0;
  SolveResult res = solve_lp(p);
  if (res.status != SolveStatus::Optimal)
    throw SolverFailure("relative_interior_point: margin LP failed");
  Vec w(cone.dim, 0.0);
  for (int g = 0; g < ng; ++g) {
    Vec ghat = scale(cone.gens[g], 1.0 / norm2(cone.gens[g]));
    axpy(res.x[1 + g], ghat, w);
  }
  double n1 = norm1(w);
  if (n1 <= 1e-12)
    throw SolverFailure("relative_interior_point: degenerate (lineality-heavy) cone");
  return scale(w, 1.0 / n1);
}

Mat shrink_costs(const Mat& pi, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ValidationError("EpsilonOutOfRange: epsilon must be in (0,1)");
  const int m = static_cast<int>(pi.rows());
  Mat out = pi;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      if (pi(i, j) * pi(j, i) > 1.0 + 1e-12)
        out(i, j) = 1.0 + (1.0 - epsilon) * (pi(i, j) - 1.0);
    }
  return out;
}

}  // namespace conic
