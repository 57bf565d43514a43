#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "conic/cone.hpp"
#include "conic/linalg.hpp"

namespace conic {

// Concave scalar function given by a first-order oracle: returns the value
// at x and, when grad != nullptr, fills a supergradient (global
// over-estimator slope).
using ConcaveOracle = std::function<double(const Vec& x, Vec* grad)>;

// Convex program in the variables x in R^n:
//   maximize   c.x            (or a concave oracle objective)
//   subject to Aeq x  = beq
//              Ain x >= bin
//              sign_k * x[idx_k] in cone_k      (polyhedral memberships)
//              f_j(x) >= 0                      (concave oracles)
//              lo <= x <= hi
struct ConvexProgram {
  int n = 0;
  Vec lo, hi;  // default (-inf, +inf); finite boxes required by the cutting plane
  std::vector<Vec> Aeq;
  Vec beq;
  std::vector<Vec> Ain;
  Vec bin;
  struct ConicBlock {
    std::vector<int> idx;
    PolyCone cone;
    double sign = 1.0;
  };
  std::vector<ConicBlock> cones;
  std::vector<ConcaveOracle> concave_ge0;
  Vec c;  // linear objective; empty means 0
  std::optional<ConcaveOracle> objective;

  void init(int vars) {
    n = vars;
    lo.assign(n, -kInf);
    hi.assign(n, kInf);
    c.assign(n, 0.0);
  }
  void add_eq(Vec row, double rhs) {
    Aeq.push_back(std::move(row));
    beq.push_back(rhs);
  }
  void add_ge(Vec row, double rhs) {
    Ain.push_back(std::move(row));
    bin.push_back(rhs);
  }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit, NumericalFailure };

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Vec x;
  double value = 0.0;
  Vec dual_eq;  // multipliers for Aeq rows (LP path only)
  Vec farkas;   // infeasibility certificate over [Aeq; Ain] rows
  Vec ray;      // improving direction when Unbounded
  double gap = 0.0;
  int iterations = 0;
};

struct SolveOptions {
  double lp_tol = 1e-9;
  double nl_tol = 1e-7;
  double gap_tol = 1e-7;
  int iter_limit = 10000;
};

// Pure-LP path; throws if nonlinear oracles are present.
SolveResult solve_lp(const ConvexProgram& program, const SolveOptions& opt = {});

// Cutting-plane outer approximation for programs with concave oracles.
// Falls back to solve_lp when no oracle is present.
SolveResult maximize_concave(const ConvexProgram& program, const SolveOptions& opt = {});

// Independent feasibility check of a point against the program's constraints.
bool check_point(const ConvexProgram& program, const Vec& x, double tol);

}  // namespace conic
