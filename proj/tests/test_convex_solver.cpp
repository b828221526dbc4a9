#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fdcf/convex_solver.hpp"
#include "fdcf/solver_selftest.hpp"

using namespace fdcf;

TEST_CASE("LP corner: maximize x subject to x <= 1") {
  ConvexProgram p;
  int x = p.add_var("x", -10.0, 10.0);
  p.objective[x] = 1.0;
  p.add_affine({{x, 1.0}}, 1.0, "cap");
  Eigen::VectorXd start(1);
  start << 0.0;
  SolveResult r = solve(p, start, 1e-6);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.point(x) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.kkt_residual <= 1e-6);
}

TEST_CASE("hand-solved 2-variable linearized EE instance") {
  // maximize f s.t. f <= psi^2/g linearized at (psi, g) = (1, 1):
  // f <= 2 psi - g, with psi <= 2, g >= 1. Optimum: psi = 2, g = 1, f = 3.
  ConvexProgram p;
  int f = p.add_var("f", 0.0);
  int psi = p.add_var("psi", 0.0, 2.0);
  int g = p.add_var("g", 1.0, 10.0);
  p.objective[f] = 1.0;
  p.add_affine({{f, 1.0}, {psi, -2.0}, {g, 1.0}}, 0.0, "taylor");
  Eigen::VectorXd start(3);
  start << 0.5, 1.0, 1.5;
  SolveResult r = solve(p, start, 1e-6);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(r.point(psi) == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(r.point(g) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sq-le-log chain attains the analytic optimum") {
  // maximize psi s.t. psi^2 <= tau log2(1 + zeta), zeta <= zbar.
  const double tau = 0.9, zbar = 7.0;
  ConvexProgram p;
  int psi = p.add_var("psi", 0.0);
  int zeta = p.add_var("zeta", 0.0);
  p.objective[psi] = 1.0;
  p.add_sq_le_log(psi, zeta, tau, "20b");
  p.add_affine({{zeta, 1.0}}, zbar, "cap");
  Eigen::VectorXd start(2);
  start << 0.1, 1.0;
  SolveResult r = solve(p, start, 1e-6);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(std::sqrt(tau * std::log2(1 + zbar))).epsilon(1e-7));
}

TEST_CASE("soc numerator constraint binds correctly") {
  // maximize lam s.t. lam^2 <= 3 theta, theta <= 0.75: lam* = 1.5.
  ConvexProgram p;
  int lam = p.add_var("lam");
  int theta = p.add_var("theta", 0.0, 0.75);
  p.objective[lam] = 1.0;
  p.add_soc_num(lam, {{theta, 3.0}}, "20c");
  Eigen::VectorXd start(2);
  start << 0.0, 0.5;
  SolveResult r = solve(p, start, 1e-6);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(1.5).epsilon(1e-7));
}

TEST_CASE("kkt residual is zero at an exact corner and grows linearly nearby") {
  ConvexProgram p;
  int x = p.add_var("x");  // no boxes: rows are just the two constraints
  p.objective[x] = 1.0;
  p.add_affine({{x, 1.0}}, 2.0, "up");
  p.add_affine({{x, -1.0}}, 5.0, "down");
  Eigen::VectorXd point(1);
  point << 2.0;
  Eigen::VectorXd mult(2);
  mult << 1.0, 0.0;  // exact multiplier for the active row
  CHECK(kkt_residual(p, point, mult) == doctest::Approx(0.0).epsilon(1e-15));
  for (double delta : {1e-6, 1e-4, 1e-2}) {
    Eigen::VectorXd q = point;
    q(0) -= delta;
    double r = kkt_residual(p, q, mult);
    CHECK(r == doctest::Approx(delta).epsilon(1e-6));
  }
}

TEST_CASE("solver never regresses below a feasible start") {
  SolverSelfTest st = run_solver_selftest(40, 20240, 1e-6, 1e-8);
  for (const auto& m : st.messages) INFO(m);
  CHECK(st.kkt_failures == 0);
}

TEST_CASE("randomized programs solve to tolerance and match the affine oracle") {
  SolverSelfTest st = run_solver_selftest(100, 77, 1e-6, 1e-8);
  for (const auto& m : st.messages) INFO(m);
  CHECK(st.count == 100);
  CHECK(st.kkt_failures == 0);
  CHECK(st.affine_checked > 10);
  CHECK(st.affine_failures == 0);
  CHECK(st.max_kkt <= 1e-6);
  CHECK(st.max_affine_gap <= 1e-8);
}

TEST_CASE("solution is invariant to variable reordering") {
  RandomProgram rp = random_program(4242);
  SolveResult r1 = solve(rp.program, rp.start, 1e-6);
  REQUIRE(r1.status == SolveStatus::Optimal);

  // Reverse the variable order.
  int n = rp.program.num_vars();
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = n - 1 - i;
  ConvexProgram q;
  for (int i = 0; i < n; ++i) {
    const auto& v = rp.program.vars[perm[i]];
    q.add_var(v.name, v.lower, v.upper);
  }
  std::vector<int> inv(n);
  for (int i = 0; i < n; ++i) inv[perm[i]] = i;
  for (int i = 0; i < n; ++i) q.objective[inv[i]] = rp.program.objective[i];
  for (auto c : rp.program.constraints) {
    for (auto& t : c.lin) t.var = inv[t.var];
    for (auto& t : c.quad) t.var = inv[t.var];
    if (c.sq_var >= 0) c.sq_var = inv[c.sq_var];
    if (c.log_var >= 0) c.log_var = inv[c.log_var];
    q.constraints.push_back(c);
  }
  Eigen::VectorXd start2(n);
  for (int i = 0; i < n; ++i) start2(inv[i]) = rp.start(i);
  SolveResult r2 = solve(q, start2, 1e-6);
  REQUIRE(r2.status == SolveStatus::Optimal);
  CHECK(std::fabs(r1.objective - r2.objective) <= 10 * 1e-6 * std::max(1.0, std::fabs(r1.objective)));
}

TEST_CASE("infeasible program is reported, phase-one rescues a bad start") {
  // x <= 1 and x >= 2 cannot both hold.
  {
    ConvexProgram p;
    int x = p.add_var("x", -5.0, 5.0);
    p.objective[x] = 1.0;
    p.add_affine({{x, 1.0}}, 1.0, "up");
    p.add_affine({{x, -1.0}}, -2.0, "low");
    Eigen::VectorXd start(1);
    start << 0.0;
    SolveResult r = solve(p, start, 1e-6);
    CHECK(r.status == SolveStatus::Infeasible);
  }
  // Feasible program, start outside the feasible region.
  {
    ConvexProgram p;
    int x = p.add_var("x", -5.0, 5.0);
    p.objective[x] = 1.0;
    p.add_affine({{x, 1.0}}, 1.0, "up");
    Eigen::VectorXd start(1);
    start << 4.0;  // violates x <= 1
    SolveResult r = solve(p, start, 1e-6);
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.point(x) == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("program check rejects malformed constraints") {
  ConvexProgram p;
  int x = p.add_var("x", 0.0, 1.0);
  p.objective[x] = 1.0;
  p.add_quad({{x, -1.0}}, {}, 1.0, "bad");
  CHECK(!p.check().empty());
  Eigen::VectorXd start(1);
  start << 0.5;
  CHECK_THROWS_AS(solve(p, start, 1e-6), std::invalid_argument);
}

TEST_CASE("dump lists every constraint and the boxes") {
  ConvexProgram p;
  int x = p.add_var("x", 0.0, 2.0);
  int y = p.add_var("y");
  p.objective[x] = 1.0;
  p.add_affine({{x, 1.0}, {y, -1.0}}, 3.0, "row0");
  p.add_sq_le_log(y, x, 0.5, "row1");
  std::string d = dump(p);
  CHECK(d.find("row0") != std::string::npos);
  CHECK(d.find("row1") != std::string::npos);
  CHECK(d.find("log2") != std::string::npos);
  CHECK(d.find("0 <= x <= 2") != std::string::npos);
}
