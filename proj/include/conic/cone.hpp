#pragma once

#include <vector>

#include "conic/linalg.hpp"

namespace conic {

// Polyhedral cone given by its generators (conic hull). Zero generators are
// dropped at construction; at least one nonzero generator is required.
struct PolyCone {
  int dim = 0;
  std::vector<Vec> gens;

  static PolyCone from_generators(int dim, std::vector<Vec> generators);

  // Kabanov bid-ask constructor: generators {e_i} plus {pi[i][j] e_i - e_j}
  // for i != j. pi must have positive entries and unit diagonal.
  static PolyCone from_bid_ask(const Mat& pi);
};

struct ConeTols {
  double membership = 1e-9;
  double interior = 1e-7;
  double rank = 1e-10;
};

bool cone_contains(const PolyCone& cone, const Vec& x, double tol = 1e-9);
bool dual_contains(const PolyCone& cone, const Vec& y, double tol = 1e-9);
bool in_interior(const PolyCone& cone, const Vec& x, const ConeTols& tols = {});
bool in_relative_interior(const PolyCone& cone, const Vec& x, const ConeTols& tols = {});

// Orthonormal basis of K cap (-K): spans the generators whose negation is
// still in the cone.
std::vector<Vec> lineality(const PolyCone& cone);

// Distance-free test: is v within tol of the lineality span?
bool in_lineality(const PolyCone& cone, const Vec& v, double tol = 1e-8);

// Image of the cone under (x^F, x^I) |-> (x^F, 0_N).
PolyCone financial_part(const PolyCone& cone, int d, int N);

// Slice of the cone by the financial subspace, K cap (R^d x {0_N}): the
// purely financial transfers the cone itself allows. Generators come from
// enumerating nonnegative kernel rays of the industrial rows over supports
// of size <= N+1 (extreme rays of the sliced cone have that support bound).
PolyCone financial_restriction(const PolyCone& cone, int d, int N);

// y in ri(K^*): y.g >= margin*|g| on every generator outside the lineality,
// |y.g| <= tol on lineality generators.
bool in_dual_relative_interior(const PolyCone& cone, const Vec& y, double margin,
                               double tol = 1e-9);

// Deterministic point of ri(K) with unit 1-norm, from a margin-maximization
// LP over the generator weights.
Vec relative_interior_point(const PolyCone& cone);

// pi'[i][j] = 1 + (1-eps)(pi[i][j]-1) on strictly frictional pairs
// (pi[i][j]*pi[j][i] > 1); frictionless pairs are left unchanged.
Mat shrink_costs(const Mat& pi, double epsilon);

}  // namespace conic
