#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "conic/solve.hpp"

using namespace conic;

TEST_CASE("bounded one-variable lp") {
  ConvexProgram p;
  p.init(1);
  p.lo[0] = 0.0;
  p.hi[0] = 3.0;
  p.c[0] = 1.0;
  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.value == doctest::Approx(3.0));
  CHECK(r.x[0] == doctest::Approx(3.0));
  CHECK(check_point(p, r.x, 1e-8));
}

TEST_CASE("cone membership failure produces a farkas certificate") {
  // is (0,-1) a conic combination of {e1, e2, (1.1,-1)}? no. Spelled as
  // G lambda = x over lambda >= 0, the infeasibility certificate covers the
  // two equality rows.
  ConvexProgram p;
  p.init(3);
  p.lo = {0.0, 0.0, 0.0};
  p.add_eq({1.0, 0.0, 1.1}, 0.0);
  p.add_eq({0.0, 1.0, -1.0}, -1.0);
  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Infeasible);
  REQUIRE(r.farkas.size() == 2);
  const Vec& y = r.farkas;
  CHECK(y[0] * 0.0 + y[1] * -1.0 > 1e-9);         // y.b > 0
  CHECK(y[0] <= 1e-9);                            // y^T A <= 0 per column
  CHECK(y[1] <= 1e-9);
  CHECK(1.1 * y[0] - y[1] <= 1e-9);
}

TEST_CASE("farkas certificate verifies against the equality rows") {
  // x1 + x2 = 1, x1 + x2 = 2 is inconsistent
  ConvexProgram p;
  p.init(2);
  p.lo = {0.0, 0.0};
  p.add_eq({1.0, 1.0}, 1.0);
  p.add_eq({1.0, 1.0}, 2.0);
  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Infeasible);
  REQUIRE(r.farkas.size() == 2);
  double yb = r.farkas[0] * 1.0 + r.farkas[1] * 2.0;
  CHECK(yb > 1e-9);
  CHECK(r.farkas[0] + r.farkas[1] <= 1e-9);  // both columns identical
}

TEST_CASE("unbounded lp returns an improving ray") {
  ConvexProgram p;
  p.init(1);
  p.lo[0] = 0.0;
  p.c[0] = 1.0;
  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Unbounded);
  REQUIRE_FALSE(r.ray.empty());
  CHECK(r.ray[0] > 1e-9);
}

TEST_CASE("lp with inequality and equality rows") {
  // max x + y st x + y <= 4 (as -x - y >= -4), x - y = 1, 0 <= x,y <= 10
  ConvexProgram p;
  p.init(2);
  p.lo = {0.0, 0.0};
  p.hi = {10.0, 10.0};
  p.c = {1.0, 1.0};
  p.add_ge({-1.0, -1.0}, -4.0);
  p.add_eq({1.0, -1.0}, 1.0);
  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.value == doctest::Approx(4.0));
  CHECK(r.x[0] == doctest::Approx(2.5));
  CHECK(r.x[1] == doctest::Approx(1.5));
}

TEST_CASE("concave maximization of 2*sqrt(c) - c") {
  ConvexProgram p;
  p.init(1);
  p.lo[0] = 0.0;
  p.hi[0] = 10.0;
  p.objective = [](const Vec& x, Vec* grad) {
    double c = std::max(x[0], 1e-12);
    if (grad) (*grad)[0] = 1.0 / std::sqrt(c) - 1.0;
    return 2.0 * std::sqrt(c) - c;
  };
  SolveResult r = maximize_concave(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("linear objective falls through to the lp path") {
  ConvexProgram p;
  p.init(2);
  p.lo = {0.0, 0.0};
  p.hi = {5.0, 5.0};
  p.c = {2.0, 1.0};
  p.add_ge({-1.0, -1.0}, -3.0);
  SolveResult lp = solve_lp(p);
  SolveResult cp = maximize_concave(p);
  REQUIRE(lp.status == SolveStatus::Optimal);
  REQUIRE(cp.status == SolveStatus::Optimal);
  CHECK(cp.value == doctest::Approx(lp.value).epsilon(1e-10));
}

TEST_CASE("symmetric log split") {
  // max ln c0 + ln c1 st c0 + c1 <= 1
  ConvexProgram p;
  p.init(2);
  p.lo = {1e-3, 1e-3};
  p.hi = {1.0, 1.0};
  p.add_ge({-1.0, -1.0}, -1.0);
  p.objective = [](const Vec& x, Vec* grad) {
    if (grad) *grad = {1.0 / x[0], 1.0 / x[1]};
    return std::log(x[0]) + std::log(x[1]);
  };
  SolveResult r = maximize_concave(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.value == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-6));
  CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("concave constraint via oracle") {
  // max c1 st sqrt(c0) - c1 >= 0, c0 <= 4
  ConvexProgram p;
  p.init(2);
  p.lo = {0.0, 0.0};
  p.hi = {4.0, 10.0};
  p.c = {0.0, 1.0};
  p.concave_ge0.push_back([](const Vec& x, Vec* grad) {
    double c = std::max(x[0], 1e-12);
    if (grad) *grad = {0.5 / std::sqrt(c), -1.0};
    return std::sqrt(c) - x[1];
  });
  SolveResult r = maximize_concave(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("optimal points re-verify independently") {
  ConvexProgram p;
  p.init(3);
  p.lo = {0.0, 0.0, 0.0};
  p.hi = {2.0, 2.0, 2.0};
  p.c = {1.0, 2.0, -1.0};
  p.add_eq({1.0, 1.0, 1.0}, 2.0);
  p.add_ge({0.0, -1.0, 0.0}, -1.5);
  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(check_point(p, r.x, 1e-8));
  CHECK(r.value == doctest::Approx(dot(p.c, r.x)));
}

TEST_CASE("nonlinear oracle on the lp path throws") {
  ConvexProgram p;
  p.init(1);
  p.lo[0] = 0.0;
  p.hi[0] = 1.0;
  p.objective = [](const Vec& x, Vec*) { return x[0]; };
  CHECK_THROWS(solve_lp(p));
}
