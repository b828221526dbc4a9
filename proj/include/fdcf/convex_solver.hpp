#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

namespace fdcf {

enum class ConstraintKind { Affine, QuadLeAffine, SqLeLog, SocNum };

struct LinearTerm {
  int var = -1;
  double coef = 0;
};

// One row of the generalized convex program, in g(x) <= 0 form:
//   Affine:        lin.x - rhs <= 0
//   QuadLeAffine:  sum quad_i x_i^2 + lin.x - rhs <= 0        (quad_i >= 0)
//   SqLeLog:       x_sq^2 - log_scale log2(1 + x_log) <= 0
//   SocNum:        x_sq^2 - lin.x <= 0                        (lin coefs >= 0)
struct Constraint {
  ConstraintKind kind = ConstraintKind::Affine;
  std::vector<LinearTerm> lin;
  std::vector<LinearTerm> quad;  // coefficients on x_i^2
  double rhs = 0;
  int sq_var = -1;
  int log_var = -1;
  double log_scale = 0;
  std::string label;
};

struct Variable {
  std::string name;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct ConvexProgram {
  std::vector<Variable> vars;
  std::vector<double> objective;  // maximize objective . x
  std::vector<Constraint> constraints;

  int add_var(const std::string& name,
              double lower = -std::numeric_limits<double>::infinity(),
              double upper = std::numeric_limits<double>::infinity());
  Constraint& add_affine(std::vector<LinearTerm> lin, double rhs, std::string label = "");
  Constraint& add_quad(std::vector<LinearTerm> quad, std::vector<LinearTerm> lin, double rhs,
                       std::string label = "");
  Constraint& add_sq_le_log(int sq_var, int log_var, double log_scale, std::string label = "");
  Constraint& add_soc_num(int sq_var, std::vector<LinearTerm> lin, std::string label = "");

  int num_vars() const { return static_cast<int>(vars.size()); }
  // Rows the solver actually sees: constraints in order, then one row per
  // finite box bound (per variable, lower before upper). Multiplier vectors
  // follow this layout.
  int expanded_row_count() const;
  // Structural validity (indices in range, convexity sign conditions).
  std::vector<std::string> check() const;
};

enum class SolveStatus { Optimal, MaxIter, Infeasible };

struct SolveResult {
  Eigen::VectorXd point;
  double objective = 0;
  SolveStatus status = SolveStatus::MaxIter;
  double kkt_residual = 0;
  Eigen::VectorXd multipliers;  // expanded-row layout
  int newton_steps = 0;
};

// Log-barrier interior point with damped Newton centering (mu-schedule x10)
// and an active-set polish. `start` must satisfy the log-term domains; if it
// is not strictly feasible a phase-I relaxation runs first.
SolveResult solve(const ConvexProgram& p, const Eigen::VectorXd& start, double tol = 1e-6);

// max of scaled stationarity, primal feasibility, complementary slackness and
// dual feasibility violations at (point, multipliers).
double kkt_residual(const ConvexProgram& p, const Eigen::VectorXd& point,
                    const Eigen::VectorXd& multipliers);

// Human-readable listing, one constraint per line.
std::string dump(const ConvexProgram& p);

}  // namespace fdcf
