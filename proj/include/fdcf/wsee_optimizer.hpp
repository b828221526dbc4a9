#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fdcf/allocation.hpp"
#include "fdcf/config.hpp"
#include "fdcf/convex_solver.hpp"
#include "fdcf/fronthaul.hpp"
#include "fdcf/power_model.hpp"
#include "fdcf/scenario.hpp"
#include "fdcf/se_analysis.hpp"

namespace fdcf {

// First-order underestimator of f1^2/f2 around (f1n, f2n):
// L(f1, f2) = 2 (f1n/f2n) f1 - (f1n/f2n)^2 f2. Tight at the expansion point,
// global underestimator for f2 > 0.
struct TaylorForm {
  double ratio = 0;  // f1n / f2n
  double coef_f1() const { return 2.0 * ratio; }
  double coef_f2() const { return -ratio * ratio; }
  double operator()(double f1, double f2) const { return coef_f1() * f1 + coef_f2() * f2; }
};

TaylorForm taylor_underestimator(double f1n, double f2n);  // throws on f2n <= 0

enum class AllocScheme { EPA1, EPA2, RPA };

// EPA1: equal per-AP power split, full uplink power.
PowerAllocation init_allocation(const Scenario& scn, const ServiceMap& map,
                                const QuantizerParams& q, const SystemConfig& cfg);
PowerAllocation baseline_alloc(AllocScheme kind, const Scenario& scn, const ServiceMap& map,
                               const QuantizerParams& q, const SystemConfig& cfg,
                               std::uint64_t seed);

// Current SCA iterate: allocation plus every slack of the reformulated
// program. Slack-defining inequalities hold at the iterate's own values.
struct SCAState {
  PowerAllocation alloc;
  Eigen::VectorXd f_dl, f_ul;      // per-UE EE / bandwidth
  Eigen::VectorXd psi_dl, psi_ul;  // sqrt of SE
  Eigen::VectorXd zeta_dl, zeta_ul;  // SINRs
  Eigen::VectorXd lam_dl, lam_ul;  // sqrt of SINR numerators
  int iteration = 0;
  std::vector<double> residue_history;
  bool qos_feasible = true;
};

// Slacks from the slack-defining equalities at `alloc`, then a multiplicative
// (1 - margin) shrink so the first barrier start is strictly interior.
SCAState init_slacks(const PowerAllocation& alloc, const SECoefficients& coef,
                     const SystemConfig& cfg, double margin);

// Normalized-variable layout of the subproblem; exposed for tests. c is
// normalized per AP by the Eq.-2-saturating scale, lam_ul per UE by
// sqrt(A^u_l) (so its cone row reads lam^2 <= theta); everything else is
// carried in natural units.
struct SubproblemLayout {
  std::vector<std::pair<int, int>> c_pairs;  // served (m, k), m-major
  Eigen::VectorXd c_ref;                     // per-AP scale on c
  Eigen::VectorXd lam_ul_ref;                // per-UL-UE scale on lam
  int off_theta = 0, off_f_dl = 0, off_f_ul = 0, off_psi_dl = 0, off_psi_ul = 0;
  int off_zeta_dl = 0, off_zeta_ul = 0, off_lam_dl = 0, off_lam_ul = 0;
  int total = 0;
  int c_index(int m, int k) const;  // -1 when unserved
};

SubproblemLayout subproblem_layout(const SECoefficients& coef);

// The generalized convex program of one SCA round, expanded at `state`.
// Constraint labels carry the row family for auditing.
ConvexProgram build_subproblem(const SCAState& state, const SECoefficients& coef,
                               const SystemConfig& cfg);

Eigen::VectorXd pack_state(const SCAState& state, const SubproblemLayout& layout);
SCAState unpack_state(const Eigen::VectorXd& x, const SubproblemLayout& layout,
                      const SECoefficients& coef);

struct TraceRow {
  int iteration = 0;
  double objective = 0;  // sum of weighted f slacks
  double residue = 0;
  SolveStatus status = SolveStatus::Optimal;
};

struct OptimizeResult {
  PowerAllocation alloc;
  WSEEReport report;
  std::vector<TraceRow> trace;
  bool converged = false;
  bool feasible = false;
};

// Algorithm: EPA1/full-power start, slack init by equality, then repeat
// build -> solve -> reassign until the residue (on normalized coefficients)
// drops below eps_sca. Returns the best feasible iterate seen.
OptimizeResult optimize(const Scenario& scn, const ServiceMap& map, const QuantizerParams& q,
                        const SystemConfig& cfg, double eps_sca);

std::string trace_csv(const std::vector<TraceRow>& trace);

}  // namespace fdcf
