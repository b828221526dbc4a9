#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdcf/convex_solver.hpp"

namespace fdcf {

// A randomized instance drawn from the subproblem constraint taxonomy, with a
// known strictly feasible start.
struct RandomProgram {
  ConvexProgram program;
  Eigen::VectorXd start;
  bool all_affine = false;
};

RandomProgram random_program(std::uint64_t seed);

// Independent LP oracle: enumerate vertices (all n-subsets of active rows,
// box rows included) and take the best feasible one. Intended for <= 5 vars.
double brute_force_affine_max(const ConvexProgram& p);

struct SolverSelfTest {
  int count = 0;
  int kkt_failures = 0;
  int affine_checked = 0;
  int affine_failures = 0;
  double max_kkt = 0;
  double max_affine_gap = 0;
  std::vector<std::string> messages;
  bool passed() const { return kkt_failures == 0 && affine_failures == 0; }
};

// Solves `count` random programs, requiring KKT residual <= kkt_tol; every
// all-affine instance is cross-checked against the vertex enumeration.
SolverSelfTest run_solver_selftest(int count, std::uint64_t seed, double kkt_tol = 1e-6,
                                   double affine_tol = 1e-8);

}  // namespace fdcf
