#include "conic/solve.hpp"

#include <algorithm>
#include <cmath>

namespace conic {
namespace {

constexpr double kPivotTol = 1e-11;
// ratio-test eligibility: pivots below this would scale tableau rows by more
// than ~1e9 and destroy the factorization
constexpr double kRatioPivTol = 1e-9;
// forcing an artificial out through a coefficient smaller than this is
// numerically meaningless; leave it to the regular ratio test instead
constexpr double kForcePivTol = 1e-7;
// rebuild the tableau from scratch this often to stop roundoff accumulation
constexpr int kRefactorPeriod = 100;

// Standard-form LP: maximize c.x s.t. A x = b, x >= 0, built from a
// ConvexProgram with linear data only.
struct StandardForm {
  std::vector<Vec> A;
  Vec b;
  Vec c;
  double c0 = 0.0;  // objective constant from bound shifts
  int n_std = 0;

  // var mapping: original i -> (col, mode). mode: 0 shifted (x=lo+u),
  // 1 negated (x=hi-u), 2 split (x=u+ - u-, cols col and col+1).
  struct VarMap {
    int col;
    int mode;
    double shift;
  };
  std::vector<VarMap> vmap;
  int n_orig = 0;
  int num_eq_rows = 0;  // original equality rows come first
  int num_in_rows = 0;
  int ain_row0 = 0;  // Ain rows sit at the end so added cuts only append
  Vec row_sign;      // +1/-1 after making b nonnegative (all rows)
};

StandardForm standardize(const ConvexProgram& p) {
  StandardForm sf;
  sf.n_orig = p.n;
  sf.vmap.resize(p.n);
  int col = 0;
  for (int i = 0; i < p.n; ++i) {
    double lo = p.lo[i], hi = p.hi[i];
    if (lo > hi) throw ValidationError("empty bound interval");
    if (std::isfinite(lo)) {
      sf.vmap[i] = {col, 0, lo};
      col += 1;
    } else if (std::isfinite(hi)) {
      sf.vmap[i] = {col, 1, hi};
      col += 1;
    } else {
      sf.vmap[i] = {col, 2, 0.0};
      col += 2;
    }
  }
  int struct_cols = col;

  // Count extra columns: cone multipliers, slacks for Ain, slacks for upper
  // bounds of doubly-bounded variables.
  int cone_cols = 0;
  for (const auto& blk : p.cones) cone_cols += static_cast<int>(blk.cone.gens.size());
  int ub_rows = 0;
  for (int i = 0; i < p.n; ++i)
    if (std::isfinite(p.lo[i]) && std::isfinite(p.hi[i])) ++ub_rows;
  int cone_rows = 0;
  for (const auto& blk : p.cones) cone_rows += static_cast<int>(blk.idx.size());

  int m = static_cast<int>(p.Aeq.size()) + static_cast<int>(p.Ain.size()) + cone_rows +
          ub_rows;
  int n_std = struct_cols + cone_cols + static_cast<int>(p.Ain.size()) + ub_rows;
  sf.A.assign(m, Vec(n_std, 0.0));
  sf.b.assign(m, 0.0);
  sf.c.assign(n_std, 0.0);
  sf.n_std = n_std;
  sf.num_eq_rows = static_cast<int>(p.Aeq.size());
  sf.num_in_rows = static_cast<int>(p.Ain.size());

  auto emit_var = [&](int row, int i, double coef) {
    const auto& vm = sf.vmap[i];
    switch (vm.mode) {
      case 0:
        sf.A[row][vm.col] += coef;
        sf.b[row] -= coef * vm.shift;
        break;
      case 1:
        sf.A[row][vm.col] -= coef;
        sf.b[row] -= coef * vm.shift;
        break;
      default:
        sf.A[row][vm.col] += coef;
        sf.A[row][vm.col + 1] -= coef;
        break;
    }
  };

  int row = 0;
  for (std::size_t r = 0; r < p.Aeq.size(); ++r, ++row) {
    sf.b[row] = p.beq[r];
    for (int i = 0; i < p.n; ++i)
      if (p.Aeq[r][i] != 0.0) emit_var(row, i, p.Aeq[r][i]);
  }
  int ccol = struct_cols;
  for (const auto& blk : p.cones) {
    int bd = blk.cone.dim;
    for (int r = 0; r < bd; ++r, ++row) {
      sf.b[row] = 0.0;
      emit_var(row, blk.idx[r], blk.sign);
      for (std::size_t g = 0; g < blk.cone.gens.size(); ++g)
        sf.A[row][ccol + static_cast<int>(g)] = -blk.cone.gens[g][r];
    }
    ccol += static_cast<int>(blk.cone.gens.size());
  }
  int ubslack = struct_cols + cone_cols;
  for (int i = 0; i < p.n; ++i) {
    if (std::isfinite(p.lo[i]) && std::isfinite(p.hi[i])) {
      sf.b[row] = p.hi[i] - p.lo[i];
      sf.A[row][sf.vmap[i].col] = 1.0;
      sf.A[row][ubslack] = 1.0;
      ++row;
      ++ubslack;
    }
  }
  // Ain rows last, with their slacks as the last columns, so appending an
  // inequality grows the standard form without renumbering anything
  sf.ain_row0 = row;
  int slack0 = struct_cols + cone_cols + ub_rows;
  for (std::size_t r = 0; r < p.Ain.size(); ++r, ++row) {
    sf.b[row] = p.bin[r];
    for (int i = 0; i < p.n; ++i)
      if (p.Ain[r][i] != 0.0) emit_var(row, i, p.Ain[r][i]);
    sf.A[row][slack0 + static_cast<int>(r)] = -1.0;  // Ain x - s = bin
  }

  if (!p.c.empty()) {
    for (int i = 0; i < p.n; ++i) {
      double coef = p.c[i];
      if (coef == 0.0) continue;
      const auto& vm = sf.vmap[i];
      switch (vm.mode) {
        case 0:
          sf.c[vm.col] += coef;
          sf.c0 += coef * vm.shift;
          break;
        case 1:
          sf.c[vm.col] -= coef;
          sf.c0 += coef * vm.shift;
          break;
        default:
          sf.c[vm.col] += coef;
          sf.c[vm.col + 1] -= coef;
          break;
      }
    }
  }

  sf.row_sign.assign(m, 1.0);
  for (int r = 0; r < m; ++r) {
    if (sf.b[r] < 0.0) {
      sf.row_sign[r] = -1.0;
      sf.b[r] = -sf.b[r];
      for (double& v : sf.A[r]) v = -v;
    }
  }
  return sf;
}

// Dense tableau simplex over [A | I_artificial | rhs]. Artificials keep the
// basis invertible and carry the dual values; they are barred from entering.
class Simplex {
 public:
  Simplex(const StandardForm& sf, double tol) : sf_(sf), tol_(tol) {
    m_ = static_cast<int>(sf.A.size());
    n_ = sf.n_std;
    reset();
  }

  // fresh all-artificial basis
  void reset() {
    tab_.assign(m_, Vec(n_ + m_ + 1, 0.0));
    basis_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) tab_[i][j] = sf_.A[i][j];
      tab_[i][n_ + i] = 1.0;
      tab_[i][n_ + m_] = sf_.b[i];
      basis_[i] = n_ + i;
    }
  }

  // phase 1: minimize sum of artificials. Returns infeasibility amount.
  double phase1(int iter_limit, int* iters) {
    Vec cost(n_ + m_, 0.0);
    for (int i = 0; i < m_; ++i) cost[n_ + i] = -1.0;
    run(cost, /*allow_artificial_entering=*/false, iter_limit, iters);
    double s = 0.0;
    for (int i = 0; i < m_; ++i)
      if (basis_[i] >= n_) s += tab_[i][n_ + m_];
    return s;
  }

  // Pivot leftover basic artificials onto structural columns so phase 2 can
  // never grow them again. Rows with no eligible column are redundant and
  // keep their artificial pinned at (near) zero.
  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      int enter = -1;
      double best = kForcePivTol;
      for (int j = 0; j < n_; ++j) {
        double a = std::abs(tab_[i][j]);
        if (a > best) {
          best = a;
          enter = j;
        }
      }
      if (enter >= 0) pivot(i, enter);
    }
  }

  // phase 2. Returns true when bounded optimal, false when unbounded.
  bool phase2(int iter_limit, int* iters) {
    Vec cost(n_ + m_, 0.0);
    for (int j = 0; j < n_; ++j) cost[j] = sf_.c[j];
    return run(cost, false, iter_limit, iters);
  }

  const std::vector<int>& basis() const { return basis_; }

  // Adopt a basis carried over from a previous solve (smaller program whose
  // rows and columns are a prefix of this one). Reverts to the fresh
  // artificial basis when the proposed basis matrix is singular.
  bool warm_start(const std::vector<int>& basis) {
    std::vector<int> saved = basis_;
    basis_ = basis;
    if (refactor()) return true;
    basis_ = std::move(saved);
    return false;
  }

  // Dual simplex: restores primal feasibility after appended rows while the
  // basis stays dual feasible for `cost`. Returns false when an infeasible
  // row admits no pivot (primal infeasible).
  bool dual_simplex(const Vec& cost, int iter_limit, int* iters) {
    for (int it = 0; it < iter_limit; ++it) {
      int leave = -1;
      double most = -1e-9;
      for (int i = 0; i < m_; ++i) {
        double rhs = tab_[i][n_ + m_];
        if (rhs < most) {
          most = rhs;
          leave = i;
        }
      }
      if (leave < 0) return true;
      if (iters) ++*iters;
      Vec rc = reduced_costs(cost);
      int enter = -1;
      double best_ratio = kInf;
      double best_piv = 0.0;
      for (int j = 0; j < n_; ++j) {
        double a = tab_[leave][j];
        if (a >= -kForcePivTol) continue;
        double ratio = rc[j] / a;  // rc <= 0 at a dual-feasible basis
        double tie = 1e-9 * (1.0 + std::abs(best_ratio));
        if (enter < 0 || ratio < best_ratio - tie) {
          best_ratio = ratio;
          enter = j;
          best_piv = -a;
        } else if (ratio <= best_ratio + tie && -a > best_piv) {
          best_ratio = std::min(best_ratio, ratio);
          enter = j;
          best_piv = -a;
        }
      }
      if (enter < 0) return false;
      pivot(leave, enter);
      if (it > 0 && it % kRefactorPeriod == 0) refactor();
    }
    throw SolverFailure("NumericalFailure: dual simplex iteration limit");
  }

  // Rebuild the tableau from the original data given the current basis:
  // tab = B^{-1} [A | I | b] via Gauss-Jordan with partial pivoting. Wipes
  // the roundoff accumulated by pivoting. Returns false (tableau untouched)
  // when the basis matrix is numerically singular.
  bool refactor() {
    std::vector<Vec> B(m_, Vec(m_, 0.0));
    for (int k = 0; k < m_; ++k) {
      int j = basis_[k];
      if (j < n_)
        for (int i = 0; i < m_; ++i) B[i][k] = sf_.A[i][j];
      else
        B[j - n_][k] = 1.0;
    }
    std::vector<Vec> M(m_, Vec(n_ + m_ + 1, 0.0));
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) M[i][j] = sf_.A[i][j];
      M[i][n_ + i] = 1.0;
      M[i][n_ + m_] = sf_.b[i];
    }
    for (int col = 0; col < m_; ++col) {
      int p = col;
      for (int i = col + 1; i < m_; ++i)
        if (std::abs(B[i][col]) > std::abs(B[p][col])) p = i;
      if (std::abs(B[p][col]) < kPivotTol) return false;
      if (p != col) {
        std::swap(B[p], B[col]);
        std::swap(M[p], M[col]);
      }
      double inv = 1.0 / B[col][col];
      for (int j = col; j < m_; ++j) B[col][j] *= inv;
      for (double& v : M[col]) v *= inv;
      for (int i = 0; i < m_; ++i) {
        if (i == col) continue;
        double f = B[i][col];
        if (f == 0.0) continue;
        for (int j = col; j < m_; ++j) B[i][j] -= f * B[col][j];
        for (int j = 0; j <= n_ + m_; ++j) M[i][j] -= f * M[col][j];
      }
    }
    tab_ = std::move(M);
    return true;
  }

  Vec reduced_costs(const Vec& cost) const {
    Vec y(m_);
    for (int i = 0; i < m_; ++i) y[i] = cost[basis_[i]];
    Vec rc(n_ + m_);
    for (int j = 0; j < n_ + m_; ++j) {
      double s = cost[j];
      for (int i = 0; i < m_; ++i) s -= y[i] * tab_[i][j];
      rc[j] = s;
    }
    return rc;
  }

  // Row multipliers y = c_B B^{-1}, read off the artificial columns:
  // rc[n+i] = cost[n+i] - y_i since artificial i is the i-th unit column.
  Vec duals(const Vec& cost) const {
    Vec rc = reduced_costs(cost);
    Vec y(m_);
    for (int i = 0; i < m_; ++i) y[i] = cost[n_ + i] - rc[n_ + i];
    return y;
  }

  Vec phase1_cost() const {
    Vec cost(n_ + m_, 0.0);
    for (int i = 0; i < m_; ++i) cost[n_ + i] = -1.0;
    return cost;
  }
  Vec phase2_cost() const {
    Vec cost(n_ + m_, 0.0);
    for (int j = 0; j < n_; ++j) cost[j] = sf_.c[j];
    return cost;
  }

  Vec solution() const {
    Vec x(n_, 0.0);
    for (int i = 0; i < m_; ++i)
      if (basis_[i] < n_) x[basis_[i]] = tab_[i][n_ + m_];
    return x;
  }

  int unbounded_col() const { return unbounded_col_; }

  // direction increasing unbounded_col_ by 1 while staying feasible
  Vec unbounded_ray() const {
    Vec d(n_, 0.0);
    d[unbounded_col_] = 1.0;
    for (int i = 0; i < m_; ++i)
      if (basis_[i] < n_) d[basis_[i]] = -tab_[i][unbounded_col_];
    return d;
  }

 private:
  // Does column j offer a pivot large enough to keep the tableau stable?
  bool acceptable_pivot(int j) const {
    for (int i = 0; i < m_; ++i) {
      double a = tab_[i][j];
      if (a > kForcePivTol) return true;
      if (basis_[i] >= n_ && std::abs(a) > kForcePivTol && tab_[i][n_ + m_] <= 1e-11)
        return true;
    }
    return false;
  }

  bool run(const Vec& cost, bool allow_art, int iter_limit, int* iters) {
    int degenerate_streak = 0;
    bool bland = false;
    double last_obj = objective(cost);
    for (int it = 0; it < iter_limit; ++it) {
      if (iters) ++*iters;
      if (it > 0 && it % kRefactorPeriod == 0) refactor();
      Vec rc = reduced_costs(cost);
      // entering: improving columns that admit a well-sized pivot first;
      // columns whose only pivots are tiny come in as a last resort. Bland
      // mode drops the size screens entirely: its termination guarantee
      // needs the plain lowest-index rule over every improving column.
      int enter = -1;
      int jmax = allow_art ? n_ + m_ : n_;
      for (int pass = 0; pass < 2 && enter < 0; ++pass) {
        double best = tol_;
        for (int j = 0; j < jmax; ++j) {
          if (rc[j] <= (bland ? tol_ : best)) continue;
          if (!bland && pass == 0 && !acceptable_pivot(j)) continue;
          enter = j;
          if (bland) break;
          best = rc[j];
        }
      }
      if (enter < 0) return true;  // optimal
      double piv_floor =
          bland ? kPivotTol : (acceptable_pivot(enter) ? kForcePivTol : kRatioPivTol);

      // ratio test; artificial basic rows at zero rhs leave first. rhs is
      // clamped at zero so roundoff below zero cannot produce a negative
      // ratio, and ties go to the largest pivot element to keep the tableau
      // well conditioned (Bland mode breaks ties by basis index instead).
      int leave = -1;
      double best_ratio = kInf;
      double best_piv = 0.0;
      for (int i = 0; i < m_; ++i) {
        double a = tab_[i][enter];
        double rhs = std::max(tab_[i][n_ + m_], 0.0);
        double ratio;
        if (!bland && basis_[i] >= n_ && std::abs(a) > piv_floor && rhs <= 1e-11) {
          ratio = 0.0;
        } else if (a > piv_floor) {
          ratio = rhs / a;
        } else {
          continue;
        }
        double tie = 1e-9 * (1.0 + std::abs(best_ratio));
        if (leave < 0 || ratio < best_ratio - tie) {
          best_ratio = ratio;
          leave = i;
          best_piv = std::abs(a);
        } else if (ratio <= best_ratio + tie) {
          bool take = bland ? basis_[i] < basis_[leave] : std::abs(a) > best_piv;
          if (take) {
            best_ratio = std::min(best_ratio, ratio);
            leave = i;
            best_piv = std::abs(a);
          }
        }
      }
      if (leave < 0) {
        unbounded_col_ = enter;
        return false;
      }
      pivot(leave, enter);
      double obj = objective(cost);
      // the improvement bar scales with the objective so refactoring noise
      // cannot masquerade as progress and silently disarm Bland mode
      if (obj <= last_obj + 1e-9 * (1.0 + std::abs(obj))) {
        if (++degenerate_streak >= 8) bland = true;
      } else {
        // leave Bland mode as soon as the stall breaks: the index rule is
        // only needed against cycling and crawls otherwise
        degenerate_streak = 0;
        bland = false;
      }
      last_obj = obj;
    }
    throw SolverFailure("NumericalFailure: simplex iteration limit");
  }

  double objective(const Vec& cost) const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) s += cost[basis_[i]] * tab_[i][n_ + m_];
    return s;
  }

  void pivot(int leave, int enter) {
    double piv = tab_[leave][enter];
    if (std::abs(piv) < kPivotTol) throw SolverFailure("NumericalFailure: tiny pivot");
    double inv = 1.0 / piv;
    for (double& v : tab_[leave]) v *= inv;
    tab_[leave][enter] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == leave) continue;
      double f = tab_[i][enter];
      if (f == 0.0) continue;
      for (int j = 0; j <= n_ + m_; ++j) tab_[i][j] -= f * tab_[leave][j];
      tab_[i][enter] = 0.0;
    }
    basis_[leave] = enter;
  }

  const StandardForm& sf_;
  double tol_;
  int m_ = 0, n_ = 0;
  std::vector<Vec> tab_;
  std::vector<int> basis_;
  int unbounded_col_ = -1;
};

Vec recover_x(const StandardForm& sf, const Vec& xs) {
  Vec x(sf.n_orig);
  for (int i = 0; i < sf.n_orig; ++i) {
    const auto& vm = sf.vmap[i];
    switch (vm.mode) {
      case 0:
        x[i] = vm.shift + xs[vm.col];
        break;
      case 1:
        x[i] = vm.shift - xs[vm.col];
        break;
      default:
        x[i] = xs[vm.col] - xs[vm.col + 1];
        break;
    }
  }
  return x;
}

Vec recover_direction(const StandardForm& sf, const Vec& ds) {
  Vec d(sf.n_orig, 0.0);
  for (int i = 0; i < sf.n_orig; ++i) {
    const auto& vm = sf.vmap[i];
    switch (vm.mode) {
      case 0:
        d[i] = ds[vm.col];
        break;
      case 1:
        d[i] = -ds[vm.col];
        break;
      default:
        d[i] = ds[vm.col] - ds[vm.col + 1];
        break;
    }
  }
  return d;
}

}  // namespace

namespace {

// Core two-phase solve over a prepared standard form. When warm_basis is
// given (from a previous solve whose rows and columns prefix this one), a
// dual-simplex cleanup replaces phase 1; on any warm-start trouble the solve
// silently falls back to the cold path. out_basis receives the final basis
// on optimal exit.
SolveResult solve_standard(const StandardForm& sf, const SolveOptions& opt,
                           const std::vector<int>* warm_basis,
                           std::vector<int>* out_basis) {
  Simplex sx(sf, opt.lp_tol);
  SolveResult res;
  res.iterations = 0;

  bool warmed = false;
  if (warm_basis && sx.warm_start(*warm_basis))
    warmed = sx.dual_simplex(sx.phase2_cost(), 2000000, &res.iterations);
  if (warm_basis && !warmed) {
    // basis was singular or a cut row turned out primal infeasible at every
    // pivot candidate: restart from the artificial basis
    sx.reset();
  }

  if (!warmed) {
    double infeas = sx.phase1(2000000, &res.iterations);
    if (infeas > opt.lp_tol * (1.0 + norm_inf(sf.b))) {
      res.status = SolveStatus::Infeasible;
      Vec y = sx.duals(sx.phase1_cost());
      // flip to the (y.b > 0, y^T A <= 0) orientation, undo row negation,
      // keep only the original eq+ineq rows
      res.farkas.assign(sf.num_eq_rows + sf.num_in_rows, 0.0);
      for (int r = 0; r < sf.num_eq_rows; ++r) res.farkas[r] = -y[r] * sf.row_sign[r];
      for (int k = 0; k < sf.num_in_rows; ++k) {
        int r = sf.ain_row0 + k;
        res.farkas[sf.num_eq_rows + k] = -y[r] * sf.row_sign[r];
      }
      return res;
    }
    sx.drive_out_artificials();
    sx.refactor();
  }

  bool bounded = sx.phase2(2000000, &res.iterations);
  if (!bounded) {
    res.status = SolveStatus::Unbounded;
    res.ray = recover_direction(sf, sx.unbounded_ray());
    res.x = recover_x(sf, sx.solution());
    return res;
  }

  res.status = SolveStatus::Optimal;
  sx.refactor();
  Vec xs = sx.solution();
  res.x = recover_x(sf, xs);
  res.value = sf.c0;
  for (int j = 0; j < sf.n_std; ++j) res.value += sf.c[j] * xs[j];
  Vec y = sx.duals(sx.phase2_cost());
  res.dual_eq.assign(sf.num_eq_rows, 0.0);
  for (int r = 0; r < sf.num_eq_rows; ++r) res.dual_eq[r] = y[r] * sf.row_sign[r];
  if (out_basis) *out_basis = sx.basis();
  return res;
}

}  // namespace

SolveResult solve_lp(const ConvexProgram& program, const SolveOptions& opt) {
  if (!program.concave_ge0.empty() || program.objective)
    throw ValidationError("solve_lp: nonlinear oracles present");
  StandardForm sf = standardize(program);
  return solve_standard(sf, opt, nullptr, nullptr);
}

SolveResult maximize_concave(const ConvexProgram& program, const SolveOptions& opt) {
  if (program.concave_ge0.empty() && !program.objective) return solve_lp(program, opt);

  for (int i = 0; i < program.n; ++i)
    if (!std::isfinite(program.lo[i]) || !std::isfinite(program.hi[i]))
      throw ValidationError("maximize_concave: finite box bounds required");

  const bool has_obj = program.objective.has_value();
  ConvexProgram work;
  work.init(program.n + (has_obj ? 1 : 0));
  for (int i = 0; i < program.n; ++i) {
    work.lo[i] = program.lo[i];
    work.hi[i] = program.hi[i];
  }
  auto pad = [&](const Vec& row) {
    Vec r(work.n, 0.0);
    std::copy(row.begin(), row.end(), r.begin());
    return r;
  };
  for (std::size_t r = 0; r < program.Aeq.size(); ++r)
    work.add_eq(pad(program.Aeq[r]), program.beq[r]);
  for (std::size_t r = 0; r < program.Ain.size(); ++r)
    work.add_ge(pad(program.Ain[r]), program.bin[r]);
  work.cones = program.cones;
  int tau = program.n;
  if (has_obj) {
    // tau stays free: a seed cut at the box center bounds it from above
    // without injecting huge bound rows into the tableau
    work.c[tau] = 1.0;
    Vec center(program.n);
    for (int i = 0; i < program.n; ++i) center[i] = 0.5 * (program.lo[i] + program.hi[i]);
    Vec grad(program.n, 0.0);
    double v0 = (*program.objective)(center, &grad);
    Vec row = pad(grad);
    row[tau] = -1.0;
    work.add_ge(std::move(row), dot(grad, center) - v0);
  } else {
    work.c = pad(program.c);
  }

  SolveResult best;
  best.status = SolveStatus::IterLimit;
  double ub = kInf, lb = -kInf;
  Vec x_best;

  // basis carried across cut rounds; cuts only append rows and slack
  // columns, so the old basis stays valid (artificial ids shift with n_std)
  std::vector<int> warm;
  int warm_nstd = 0;
  std::size_t warm_rows = 0;
  int warm_ain0 = 0;

  // cut pool management: cuts older than this that are slack at the current
  // optimum get dropped so the working LP stays small. The seed cut is
  // permanent, which keeps the epigraph variable bounded over the box.
  constexpr int kCutKeepAge = 20;
  const std::size_t first_deletable = work.Ain.size();
  std::vector<int> cut_age;

  for (int it = 0; it < opt.iter_limit; ++it) {
    StandardForm sf = standardize(work);
    SolveResult lp;
    if (warm.empty()) {
      lp = solve_standard(sf, opt, nullptr, &warm);
    } else {
      std::vector<int> basis;
      basis.reserve(sf.A.size());
      for (int b : warm) basis.push_back(b < warm_nstd ? b : sf.n_std + (b - warm_nstd));
      // new cut rows enter with their slack basic (negative when the cut is
      // violated, which is what the dual simplex then repairs)
      int slack0 = sf.n_std - sf.num_in_rows;
      for (std::size_t r = warm_rows; r < sf.A.size(); ++r)
        basis.push_back(slack0 + static_cast<int>(r) - sf.ain_row0);
      lp = solve_standard(sf, opt, &basis, &warm);
    }
    warm_nstd = sf.n_std;
    warm_rows = sf.A.size();
    warm_ain0 = sf.ain_row0;
    best.iterations += lp.iterations;
    if (lp.status == SolveStatus::Infeasible) {
      best.status = SolveStatus::Infeasible;
      best.farkas = lp.farkas;
      return best;
    }
    if (lp.status == SolveStatus::Unbounded) {
      best.status = SolveStatus::Unbounded;
      best.ray = Vec(lp.ray.begin(), lp.ray.begin() + program.n);
      return best;
    }
    Vec xhat(lp.x.begin(), lp.x.begin() + program.n);
    ub = std::min(ub, lp.value);

    bool feasible = true;
    std::vector<std::pair<Vec, double>> new_cuts;
    for (const auto& f : program.concave_ge0) {
      Vec grad(program.n, 0.0);
      double v = f(xhat, &grad);
      if (v < -opt.nl_tol) {
        feasible = false;
        // v + grad.(x - xhat) >= 0
        Vec row = pad(grad);
        new_cuts.emplace_back(std::move(row), dot(grad, xhat) - v);
      }
    }
    double true_obj;
    if (has_obj) {
      Vec grad(program.n, 0.0);
      true_obj = (*program.objective)(xhat, &grad);
      // tau <= h(xhat) + grad.(x - xhat)
      Vec row = pad(grad);
      row[tau] = -1.0;
      new_cuts.emplace_back(std::move(row), dot(grad, xhat) - true_obj);
    } else {
      true_obj = program.c.empty() ? 0.0 : dot(program.c, xhat);
    }
    if (feasible && true_obj > lb) {
      lb = true_obj;
      x_best = xhat;
    }
    if (!x_best.empty() && ub - lb <= opt.gap_tol * (1.0 + std::abs(lb))) {
      best.status = SolveStatus::Optimal;
      best.x = x_best;
      best.value = lb;
      best.gap = ub - lb;
      return best;
    }

    // retire aged cuts that are slack at the optimum and whose slack column
    // is basic (so row and column can leave together without breaking the
    // basis); then append this round's cuts
    for (int& a : cut_age) ++a;
    if (!warm.empty()) {
      int nin = static_cast<int>(work.Ain.size());
      int slack0 = warm_nstd - nin;
      std::vector<int> drop;
      for (std::size_t k = first_deletable; k < work.Ain.size(); ++k) {
        int age = cut_age[k - first_deletable];
        if (age < kCutKeepAge) continue;
        double s = dot(work.Ain[k], lp.x) - work.bin[k];
        if (s <= opt.lp_tol * (1.0 + std::abs(work.bin[k]))) continue;
        int slack_col = slack0 + static_cast<int>(k);
        int art_col = warm_nstd + warm_ain0 + static_cast<int>(k);
        bool slack_basic = false, art_basic = false;
        for (int b : warm) {
          slack_basic |= b == slack_col;
          art_basic |= b == art_col;
        }
        if (slack_basic && !art_basic) drop.push_back(static_cast<int>(k));
      }
      if (!drop.empty()) {
        auto removed_before = [&](int k) {
          int c = 0;
          for (int d : drop) c += d < k;
          return c;
        };
        std::vector<int> remapped;
        remapped.reserve(warm.size());
        int new_nstd = warm_nstd - static_cast<int>(drop.size());
        bool bad = false;
        for (int b : warm) {
          if (b < slack0) {
            remapped.push_back(b);
          } else if (b < warm_nstd) {
            int k = b - slack0;
            bool dropped = std::find(drop.begin(), drop.end(), k) != drop.end();
            if (!dropped) remapped.push_back(slack0 + k - removed_before(k));
          } else {
            int r = b - warm_nstd;
            if (r < warm_ain0) {
              remapped.push_back(new_nstd + r);
            } else {
              int k = r - warm_ain0;
              bool dropped = std::find(drop.begin(), drop.end(), k) != drop.end();
              if (dropped)
                bad = true;  // artificial of a dropped row basic: bail out
              else
                remapped.push_back(new_nstd + warm_ain0 + k - removed_before(k));
            }
          }
        }
        if (!bad && remapped.size() == warm_rows - drop.size()) {
          for (auto d = drop.rbegin(); d != drop.rend(); ++d) {
            work.Ain.erase(work.Ain.begin() + *d);
            work.bin.erase(work.bin.begin() + *d);
            cut_age.erase(cut_age.begin() + (*d - static_cast<int>(first_deletable)));
          }
          warm = std::move(remapped);
          warm_nstd = new_nstd;
          warm_rows -= drop.size();
        }
      }
    }
    for (auto& cut : new_cuts) {
      work.add_ge(std::move(cut.first), cut.second);
      cut_age.push_back(0);
    }
  }
  best.x = x_best;
  best.value = lb;
  best.gap = ub - lb;
  return best;
}

bool check_point(const ConvexProgram& p, const Vec& x, double tol) {
  if (static_cast<int>(x.size()) != p.n) return false;
  for (int i = 0; i < p.n; ++i)
    if (x[i] < p.lo[i] - tol || x[i] > p.hi[i] + tol) return false;
  for (std::size_t r = 0; r < p.Aeq.size(); ++r) {
    double v = dot(p.Aeq[r], x) - p.beq[r];
    if (std::abs(v) > tol * (1.0 + std::abs(p.beq[r]))) return false;
  }
  for (std::size_t r = 0; r < p.Ain.size(); ++r)
    if (dot(p.Ain[r], x) < p.bin[r] - tol * (1.0 + std::abs(p.bin[r]))) return false;
  for (const auto& blk : p.cones) {
    Vec v(blk.idx.size());
    for (std::size_t k = 0; k < blk.idx.size(); ++k) v[k] = blk.sign * x[blk.idx[k]];
    if (!cone_contains(blk.cone, v, std::max(tol, 1e-7 * (1.0 + norm_inf(v)))))
      return false;
  }
  for (const auto& f : p.concave_ge0)
    if (f(x, nullptr) < -tol) return false;
  return true;
}

}  // namespace conic
